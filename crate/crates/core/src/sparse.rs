//! Compressed sparse row storage for complex matrices.
//!
//! Every operator in the crate is stored in this format. Density matrices are
//! kept dense (row-major `Vec<Complex64>`), and the hot path of the integrators
//! is the sparse-times-dense product [`CsrMatrix::mul_dense_into`].

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != ZERO {
                indices.push(i);
                values.push(d);
            }
            indptr.push(indices.len());
        }
        Self { nrows: n, ncols: n, indptr, indices, values }
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicates are summed,
    /// exact zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_counts = vec![0usize; nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] = indptr[r] + row_counts[r];
        }
        let mut m = Self { nrows, ncols, indptr, indices, values };
        m.prune(0.0);
        m
    }

    pub fn from_dense(dense: &DMatrix<Complex64>, tol: f64) -> Self {
        let mut triplets = Vec::new();
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                let v = dense[(i, j)];
                if v.norm() > tol {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dense.nrows(), dense.ncols(), triplets)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(self.nrows, self.ncols, ZERO);
        for (r, c, v) in self.iter() {
            out[(r, c)] += v;
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    /// Removes entries with modulus at or below `tol`.
    pub fn prune(&mut self, tol: f64) {
        let mut new_indptr = Vec::with_capacity(self.nrows + 1);
        let mut new_indices = Vec::with_capacity(self.indices.len());
        let mut new_values = Vec::with_capacity(self.values.len());
        new_indptr.push(0);
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k].norm() > tol {
                    new_indices.push(self.indices[k]);
                    new_values.push(self.values[k]);
                }
            }
            new_indptr.push(new_indices.len());
        }
        self.indptr = new_indptr;
        self.indices = new_indices;
        self.values = new_values;
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune(0.0);
        out
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &Self, s: Complex64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch in add");
        let mut triplets: Vec<_> = self.iter().collect();
        triplets.extend(other.iter().map(|(r, c, v)| (r, c, v * s)));
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in matmul");
        let mut acc = vec![ZERO; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if acc[c] != ZERO {
                    indices.push(c);
                    values.push(acc[c]);
                }
                acc[c] = ZERO;
                touched[c] = false;
            }
            cols.clear();
            indptr.push(indices.len());
        }
        Self { nrows: self.nrows, ncols: other.ncols, indptr, indices, values }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                triplets.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, triplets)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yr = s;
        }
    }

    /// `out = scale * self * x` where `x` is a dense row-major `ncols x width`
    /// matrix. If `accumulate` is set the product is added to `out`.
    pub fn mul_dense_into(&self, x: &[Complex64], width: usize, out: &mut [Complex64], scale: Complex64, accumulate: bool) {
        debug_assert_eq!(x.len(), self.ncols * width);
        debug_assert_eq!(out.len(), self.nrows * width);
        for r in 0..self.nrows {
            let orow = &mut out[r * width..(r + 1) * width];
            if !accumulate {
                orow.iter_mut().for_each(|v| *v = ZERO);
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                let a = self.values[k] * scale;
                let c = self.indices[k];
                let xrow = &x[c * width..(c + 1) * width];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += a * xv;
                }
            }
        }
    }

    /// Tr(self * rho) for a dense row-major square `rho`.
    pub fn trace_product(&self, rho: &[Complex64]) -> Complex64 {
        let n = self.ncols;
        let mut s = ZERO;
        for (r, c, v) in self.iter() {
            s += v * rho[c * n + r];
        }
        s
    }

    /// <x| self |x>
    pub fn expectation_vec(&self, x: &[Complex64]) -> Complex64 {
        let mut s = ZERO;
        for r in 0..self.nrows {
            let mut t = ZERO;
            for (c, v) in self.row(r) {
                t += v * x[c];
            }
            s += x[r].conj() * t;
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest |A - A†| entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.add_scaled(&self.adjoint(), Complex64::new(-1.0, 0.0));
        d.max_abs()
    }

    /// Keeps rows and columns with index below `n`.
    pub fn truncate(&self, n: usize) -> Self {
        let triplets = self.iter().filter(|&(r, c, _)| r < n && c < n).collect();
        Self::from_triplets(n.min(self.nrows), n.min(self.ncols), triplets)
    }

    pub(crate) fn pattern(&self) -> (&[usize], &[usize]) {
        (&self.indptr, &self.indices)
    }

    pub(crate) fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
}

/// Sum of sparse matrices with varying coefficients sharing one merged
/// sparsity pattern, so repeated re-assembly only touches the value array.
#[derive(Clone, Debug)]
pub struct MergedSum {
    merged: CsrMatrix,
    /// For each term, the position in `merged.values` of every stored entry.
    slots: Vec<Vec<usize>>,
    terms: Vec<CsrMatrix>,
}

impl MergedSum {
    pub fn new(terms: Vec<CsrMatrix>, nrows: usize, ncols: usize) -> Self {
        let mut triplets = Vec::new();
        for t in &terms {
            assert_eq!((t.nrows(), t.ncols()), (nrows, ncols));
            triplets.extend(t.iter().map(|(r, c, _)| (r, c, Complex64::new(1.0, 0.0))));
        }
        let mut merged = CsrMatrix::from_triplets(nrows, ncols, triplets);
        merged.values_mut().iter_mut().for_each(|v| *v = ZERO);
        let slots = terms
            .iter()
            .map(|t| {
                t.iter()
                    .map(|(r, c, _)| {
                        let (indptr, indices) = merged.pattern();
                        let span = indptr[r]..indptr[r + 1];
                        span.start + indices[span].binary_search(&c).expect("entry in merged pattern")
                    })
                    .collect()
            })
            .collect();
        Self { merged, slots, terms }
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Fills the merged matrix with `sum_k coeffs[k] * terms[k]`.
    pub fn assemble(&mut self, coeffs: &[Complex64]) -> &CsrMatrix {
        debug_assert_eq!(coeffs.len(), self.terms.len());
        let values = self.merged.values_mut();
        values.iter_mut().for_each(|v| *v = ZERO);
        for ((term, slots), &c) in self.terms.iter().zip(&self.slots).zip(coeffs) {
            if c == ZERO {
                continue;
            }
            for (&slot, &v) in slots.iter().zip(term.values()) {
                values[slot] += c * v;
            }
        }
        &self.merged
    }

    pub fn current(&self) -> &CsrMatrix {
        &self.merged
    }
}

/// Writes the conjugate transpose of a dense row-major square matrix.
pub fn adjoint_dense_into(x: &[Complex64], n: usize, out: &mut [Complex64]) {
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = x[i * n + j].conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(0.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 1, c(1.0)), (1, 2, Complex64::new(0.0, 2.0)), (2, 0, c(-1.0))]);
        let b = CsrMatrix::from_triplets(3, 3, vec![(0, 0, c(2.0)), (1, 1, c(1.0)), (2, 1, c(3.0)), (2, 2, c(1.0))]);
        let dense = a.to_dense() * b.to_dense();
        assert!((a.matmul(&b).to_dense() - dense).norm() < 1e-14);
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0))]);
        let b = CsrMatrix::identity(3);
        let k = a.kron(&b);
        assert_eq!(k.nrows(), 6);
        assert_eq!(k.get(2, 5), c(1.0));
        assert_eq!(k.nnz(), 3);
    }

    #[test]
    fn merged_sum_reassembles() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0))]);
        let b = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (1, 1, c(1.0))]);
        let mut s = MergedSum::new(vec![a, b], 2, 2);
        let m = s.assemble(&[c(2.0), c(3.0)]).clone();
        assert_eq!(m.get(0, 1), c(5.0));
        assert_eq!(m.get(1, 1), c(3.0));
    }

    #[test]
    fn dense_product_and_trace() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (1, 0, c(1.0))]);
        let x = vec![c(1.0), c(2.0), c(3.0), c(4.0)];
        let mut out = vec![ZERO; 4];
        a.mul_dense_into(&x, 2, &mut out, c(1.0), false);
        assert_eq!(out, vec![c(3.0), c(4.0), c(1.0), c(2.0)]);
        assert_eq!(a.trace_product(&x), c(5.0));
    }
}
