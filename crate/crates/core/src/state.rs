use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{CatError, Result};
use crate::operator::Operator;
use crate::space::{ModeKind, SpaceRef};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest acceptable norm defect of a truncated coherent state.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum StateData {
    Ket(Vec<Complex64>),
    /// Row-major density matrix.
    Density(Vec<Complex64>),
}

#[derive(Clone, Debug)]
pub struct QuantumState {
    space: SpaceRef,
    data: StateData,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logical {
    Zero,
    One,
    Plus,
    Minus,
}

impl QuantumState {
    pub fn from_ket(space: &SpaceRef, ket: Vec<Complex64>) -> Result<Self> {
        if ket.len() != space.dim() {
            return Err(CatError::SpaceMismatch);
        }
        Ok(Self { space: space.clone(), data: StateData::Ket(ket) })
    }

    pub fn from_density(space: &SpaceRef, rho: Vec<Complex64>) -> Result<Self> {
        let d = space.dim();
        if rho.len() != d * d {
            return Err(CatError::SpaceMismatch);
        }
        Ok(Self { space: space.clone(), data: StateData::Density(rho) })
    }

    /// Product ket with the listed single-mode factors; every other mode is
    /// in its lowest level.
    pub fn product(space: &SpaceRef, factors: &[(&str, Vec<Complex64>)]) -> Result<Self> {
        let mut locals: Vec<Vec<Complex64>> = space
            .modes()
            .iter()
            .map(|m| {
                let mut v = vec![ZERO; m.dim];
                v[0] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        for (label, f) in factors {
            let idx = space.index_of(label)?;
            if f.len() != space.modes()[idx].dim {
                return Err(CatError::InvalidDimension { label: label.to_string(), dim: f.len(), reason: "factor length" });
            }
            locals[idx] = f.clone();
        }
        let mut ket = vec![Complex64::new(1.0, 0.0)];
        for l in &locals {
            let mut next = Vec::with_capacity(ket.len() * l.len());
            for &x in &ket {
                next.extend(l.iter().map(|&y| x * y));
            }
            ket = next;
        }
        let mut s = Self::from_ket(space, ket)?;
        s.normalize();
        Ok(s)
    }

    pub fn basis(space: &SpaceRef, levels: &[usize]) -> Result<Self> {
        if levels.len() != space.modes().len() || levels.iter().zip(space.modes()).any(|(&n, m)| n >= m.dim) {
            return Err(CatError::InvalidParameter("basis levels do not fit the space".into()));
        }
        let mut ket = vec![ZERO; space.dim()];
        ket[space.flatten(levels)] = Complex64::new(1.0, 0.0);
        Self::from_ket(space, ket)
    }

    pub fn coherent(space: &SpaceRef, label: &str, alpha: Complex64) -> Result<Self> {
        let dim = space.require_kind(label, &[ModeKind::Bosonic])?.dim;
        Self::product(space, &[(label, coherent_amplitudes(dim, alpha)?)])
    }

    pub fn cat(space: &SpaceRef, label: &str, alpha: Complex64, sign: i8) -> Result<Self> {
        let dim = space.require_kind(label, &[ModeKind::Bosonic])?.dim;
        Self::product(space, &[(label, cat_amplitudes(dim, alpha, sign)?)])
    }

    pub fn logical(space: &SpaceRef, label: &str, alpha: Complex64, which: Logical) -> Result<Self> {
        let dim = space.require_kind(label, &[ModeKind::Bosonic])?.dim;
        let code = CatCode::new(dim, alpha)?;
        Self::product(space, &[(label, code.logical(which))])
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_ket(&self) -> bool {
        matches!(self.data, StateData::Ket(_))
    }

    pub fn ket(&self) -> Option<&[Complex64]> {
        match &self.data {
            StateData::Ket(k) => Some(k),
            StateData::Density(_) => None,
        }
    }

    pub fn density(&self) -> Vec<Complex64> {
        match &self.data {
            StateData::Ket(k) => outer(k),
            StateData::Density(r) => r.clone(),
        }
    }

    pub fn into_density(self) -> Self {
        let rho = self.density();
        Self { space: self.space, data: StateData::Density(rho) }
    }

    pub fn normalize(&mut self) {
        match &mut self.data {
            StateData::Ket(k) => {
                let n = k.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if n > 0.0 {
                    k.iter_mut().for_each(|v| *v /= n);
                }
            }
            StateData::Density(r) => {
                let d = self.space.dim();
                let t: f64 = (0..d).map(|i| r[i * d + i].re).sum();
                if t > 0.0 {
                    r.iter_mut().for_each(|v| *v /= t);
                }
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Ket(k) => k.iter().map(|v| v.norm_sqr()).sum(),
            StateData::Density(r) => {
                let d = self.space.dim();
                (0..d).map(|i| r[i * d + i].re).sum()
            }
        }
    }

    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        if op.space() != &self.space {
            return Err(CatError::SpaceMismatch);
        }
        Ok(match &self.data {
            StateData::Ket(k) => op.matrix().expectation_vec(k),
            StateData::Density(r) => op.matrix().trace_product(r),
        })
    }

    /// ⟨ψ|ρ|ψ⟩ against a pure target.
    pub fn fidelity_to_ket(&self, target: &[Complex64]) -> f64 {
        match &self.data {
            StateData::Ket(k) => inner(target, k).norm_sqr(),
            StateData::Density(r) => {
                let d = self.space.dim();
                let mut s = ZERO;
                for i in 0..d {
                    let mut t = ZERO;
                    for j in 0..d {
                        t += r[i * d + j] * target[j];
                    }
                    s += target[i].conj() * t;
                }
                s.re
            }
        }
    }

    /// Reduced density matrix of one mode.
    pub fn reduced(&self, label: &str) -> Result<DMatrix<Complex64>> {
        let idx = self.space.index_of(label)?;
        let dk = self.space.modes()[idx].dim;
        let (dl, dr) = self.space.split_dims(idx);
        let d = self.space.dim();
        let mut out = DMatrix::from_element(dk, dk, ZERO);
        let flat = |l: usize, i: usize, r: usize| (l * dk + i) * dr + r;
        match &self.data {
            StateData::Ket(k) => {
                for l in 0..dl {
                    for r in 0..dr {
                        for i in 0..dk {
                            let ki = k[flat(l, i, r)];
                            if ki == ZERO {
                                continue;
                            }
                            for j in 0..dk {
                                out[(i, j)] += ki * k[flat(l, j, r)].conj();
                            }
                        }
                    }
                }
            }
            StateData::Density(rho) => {
                for l in 0..dl {
                    for r in 0..dr {
                        for i in 0..dk {
                            let row = flat(l, i, r) * d;
                            for j in 0..dk {
                                out[(i, j)] += rho[row + flat(l, j, r)];
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Checks trace, Hermiticity and (for small spaces) positivity.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let drift = (self.trace() - 1.0).abs();
        if drift > tol {
            return Err(CatError::TraceDrift { t: f64::NAN, drift });
        }
        if let StateData::Density(r) = &self.data {
            let d = self.space.dim();
            let m = DMatrix::from_row_slice(d, d, r);
            let herm = (&m - m.adjoint()).camax();
            if herm > tol {
                return Err(CatError::NotHermitian(herm));
            }
            if d <= 400 {
                let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
                let min = h.symmetric_eigenvalues().min();
                if min < -1e-8 {
                    return Err(CatError::InvalidParameter(format!("density matrix has eigenvalue {min:.3e}")));
                }
            }
        }
        Ok(())
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn outer(k: &[Complex64]) -> Vec<Complex64> {
    let d = k.len();
    let mut r = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            r[i * d + j] = k[i] * k[j].conj();
        }
    }
    r
}

/// Truncated coherent-state amplitudes e^{−|α|²/2} αⁿ/√n!. Fails if the
/// truncation loses more than [`TRUNCATION_LIMIT`] of the norm.
pub fn coherent_amplitudes(dim: usize, alpha: Complex64) -> Result<Vec<Complex64>> {
    let mut v = Vec::with_capacity(dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        v.push(c);
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    let defect = 1.0 - v.iter().map(|x| x.norm_sqr()).sum::<f64>();
    if defect > TRUNCATION_LIMIT {
        return Err(CatError::Truncation { defect, limit: TRUNCATION_LIMIT });
    }
    Ok(v)
}

/// Normalized N_±(|α⟩ ± |−α⟩) amplitudes.
pub fn cat_amplitudes(dim: usize, alpha: Complex64, sign: i8) -> Result<Vec<Complex64>> {
    let coh = coherent_amplitudes(dim, alpha)?;
    let keep = if sign >= 0 { 0 } else { 1 };
    let mut v: Vec<Complex64> = coh.iter().enumerate().map(|(n, &c)| if n % 2 == keep { c } else { ZERO }).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Orthonormal cat codespace {|C+⟩, |C−⟩} of one bosonic mode.
#[derive(Clone, Debug)]
pub struct CatCode {
    pub alpha: Complex64,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
}

impl CatCode {
    pub fn new(dim: usize, alpha: Complex64) -> Result<Self> {
        Ok(Self { alpha, plus: cat_amplitudes(dim, alpha, 1)?, minus: cat_amplitudes(dim, alpha, -1)? })
    }

    pub fn dim(&self) -> usize {
        self.plus.len()
    }

    pub fn logical(&self, which: Logical) -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match which {
            Logical::Plus => self.plus.clone(),
            Logical::Minus => self.minus.clone(),
            Logical::Zero => self.plus.iter().zip(&self.minus).map(|(p, m)| (p + m) * s).collect(),
            Logical::One => self.plus.iter().zip(&self.minus).map(|(p, m)| (p - m) * s).collect(),
        }
    }

    /// 2×2 block of a reduced density matrix in the {|C+⟩, |C−⟩} basis.
    pub fn project(&self, rho: &DMatrix<Complex64>) -> Matrix2<Complex64> {
        let b = [&self.plus, &self.minus];
        let mut out = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = ZERO;
                for (r, &bi) in b[i].iter().enumerate() {
                    if bi == ZERO {
                        continue;
                    }
                    let mut t = ZERO;
                    for (c, &bj) in b[j].iter().enumerate() {
                        t += rho[(r, c)] * bj;
                    }
                    s += bi.conj() * t;
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// 1 − codespace population of a reduced density matrix.
    pub fn leakage(&self, rho: &DMatrix<Complex64>) -> f64 {
        let p = self.project(rho);
        let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
        tr - (p[(0, 0)].re + p[(1, 1)].re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::HilbertSpace;

    #[test]
    fn cats_are_orthogonal_and_normalized() {
        let code = CatCode::new(30, Complex64::new(2.0, 0.0)).unwrap();
        assert!(inner(&code.plus, &code.minus).norm() == 0.0);
        assert!((inner(&code.plus, &code.plus).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_detected() {
        assert!(coherent_amplitudes(5, Complex64::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn reduced_of_product_state() {
        let s = HilbertSpace::bosonic(&[("a", 20), ("b", 3)]).unwrap();
        let psi = QuantumState::cat(&s, "a", Complex64::new(1.5, 0.0), 1).unwrap();
        let ra = psi.reduced("a").unwrap();
        let rb = psi.clone().into_density().reduced("b").unwrap();
        let code = CatCode::new(20, Complex64::new(1.5, 0.0)).unwrap();
        assert!(code.leakage(&ra).abs() < 1e-12);
        assert!((rb[(0, 0)].re - 1.0).abs() < 1e-12);
        psi.into_density().check_physical(1e-10).unwrap();
    }
}
