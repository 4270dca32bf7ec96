//! Shifted Fock basis |±, n⟩ = [D(α) ± (−1)ⁿ D(−α)]|n⟩ / √2.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CatError, Result};
use crate::operator::{local_annihilation, local_displacement};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Gram matrices with a larger condition number are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e8;

#[derive(Clone, Debug)]
pub struct ShiftedFockBasis {
    pub alpha: Complex64,
    pub n_levels: usize,
    /// Columns `0..n_levels` are |+, n⟩, columns `n_levels..` are |−, n⟩.
    pub basis_matrix: DMatrix<Complex64>,
    pub orthonormalized: bool,
    /// Worst condition number of the two per-branch Gram matrices.
    pub gram_condition: f64,
    /// Largest |G − I| entry over both branches before orthonormalization.
    pub gram_defect: f64,
}

impl ShiftedFockBasis {
    pub fn new(alpha: Complex64, n_levels: usize, dim: usize) -> Result<Self> {
        if n_levels == 0 || 2 * n_levels > dim {
            return Err(CatError::InvalidParameter(format!("need 0 < 2·n_levels ≤ dim, got n_levels={n_levels}, dim={dim}")));
        }
        let raw = raw_states(alpha, n_levels, dim)?;
        let mut cond: f64 = 1.0;
        let mut defect: f64 = 0.0;
        for branch in 0..2 {
            let cols = raw.columns(branch * n_levels, n_levels);
            let g = cols.adjoint() * cols;
            let id = DMatrix::<Complex64>::identity(n_levels, n_levels);
            defect = defect.max((&g - id).camax());
            let sv = g.singular_values();
            let c = sv.max() / sv.min();
            cond = cond.max(if c.is_finite() { c } else { f64::INFINITY });
        }
        if cond > MAX_GRAM_CONDITION {
            return Err(CatError::IllConditioned { what: "shifted Fock Gram matrix", cond });
        }
        Ok(Self { alpha, n_levels, basis_matrix: raw, orthonormalized: false, gram_condition: cond, gram_defect: defect })
    }

    /// Modified Gram–Schmidt within each ± branch. Opposite branches are
    /// orthogonal by parity and are left untouched.
    pub fn orthonormalize(&mut self) {
        let n = self.n_levels;
        for branch in 0..2 {
            for j in 0..n {
                let cj = branch * n + j;
                for i in 0..j {
                    let ci = branch * n + i;
                    let proj = self.basis_matrix.column(ci).dotc(&self.basis_matrix.column(cj));
                    let qi = self.basis_matrix.column(ci).into_owned();
                    let mut col = self.basis_matrix.column_mut(cj);
                    col -= qi * proj;
                }
                let norm = self.basis_matrix.column(cj).norm();
                self.basis_matrix.column_mut(cj).unscale_mut(norm);
            }
        }
        self.orthonormalized = true;
    }

    pub fn state(&self, sign: i8, n: usize) -> Vec<Complex64> {
        let col = if sign >= 0 { n } else { self.n_levels + n };
        self.basis_matrix.column(col).iter().copied().collect()
    }

    /// Largest inner product between states of opposite branches.
    pub fn cross_branch_overlap(&self) -> f64 {
        let n = self.n_levels;
        let p = self.basis_matrix.columns(0, n);
        let m = self.basis_matrix.columns(n, n);
        (p.adjoint() * m).camax()
    }

    /// Worst residual of a|±,n⟩ = √n|∓,n−1⟩ + α|∓,n⟩ over the lowest
    /// `levels` states. Only meaningful before orthonormalization.
    pub fn annihilation_residual(&self, levels: usize) -> f64 {
        let dim = self.basis_matrix.nrows();
        let a = local_annihilation(dim);
        let mut worst: f64 = 0.0;
        for sign in [1i8, -1] {
            for n in 0..levels.min(self.n_levels - 1) {
                let lhs = a.mul_vec(&self.state(sign, n));
                let mut rhs: Vec<Complex64> = self.state(-sign, n).iter().map(|v| v * self.alpha).collect();
                if n > 0 {
                    let lower = self.state(-sign, n - 1);
                    let s = (n as f64).sqrt();
                    rhs.iter_mut().zip(&lower).for_each(|(r, l)| *r += l * s);
                }
                let res = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max(res);
            }
        }
        worst
    }
}

fn raw_states(alpha: Complex64, n_levels: usize, dim: usize) -> Result<DMatrix<Complex64>> {
    let dp = local_displacement(dim, alpha).to_dense();
    let dm = local_displacement(dim, -alpha).to_dense();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = DMatrix::from_element(dim, 2 * n_levels, ZERO);
    for n in 0..n_levels {
        let defect = 1.0 - dp.column(n).norm_squared();
        if defect > 1e-8 {
            return Err(CatError::Truncation { defect, limit: 1e-8 });
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for r in 0..dim {
            out[(r, n)] = (dp[(r, n)] + dm[(r, n)] * sign) * s;
            out[(r, n_levels + n)] = (dp[(r, n)] - dm[(r, n)] * sign) * s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_level_count() {
        assert!(ShiftedFockBasis::new(Complex64::new(2.0, 0.0), 0, 30).is_err());
        assert!(ShiftedFockBasis::new(Complex64::new(2.0, 0.0), 20, 30).is_err());
    }

    #[test]
    fn orthonormalized_basis_is_unitary_on_its_span() {
        let mut b = ShiftedFockBasis::new(Complex64::new(2.0, 0.0), 4, 40).unwrap();
        b.orthonormalize();
        let g = b.basis_matrix.adjoint() * &b.basis_matrix;
        assert!((g - DMatrix::identity(8, 8)).camax() < 1e-10);
    }
}
