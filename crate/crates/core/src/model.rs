use num_complex::Complex64;

use crate::coefficient::TimeCoefficient;
use crate::error::{CatError, Result};
use crate::operator::Operator;
use crate::space::SpaceRef;
use crate::sparse::{adjoint_dense_into, CsrMatrix, MergedSum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub label: String,
    pub op: Operator,
    pub coeff: TimeCoefficient,
    /// Gate drives are dropped by [`LindbladModel::undriven`].
    pub drive: bool,
}

/// Jump channel `rate · D[L(t)]` with `L(t) = Σ c_k(t) O_k`.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub label: String,
    pub rate: f64,
    pub terms: Vec<(Operator, TimeCoefficient)>,
    pub drive: bool,
}

impl Dissipator {
    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|(_, c)| matches!(c, TimeCoefficient::Constant(_)))
    }

    /// `L(t)` without the rate.
    pub fn operator_at(&self, t: f64) -> CsrMatrix {
        let mut it = self.terms.iter();
        let (o, c) = it.next().expect("dissipator with no terms");
        let mut m = o.matrix().scale(c.eval(t));
        for (o, c) in it {
            m = m.add_scaled(o.matrix(), c.eval(t));
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    space: SpaceRef,
    pub hamiltonian: Vec<HamiltonianTerm>,
    pub dissipators: Vec<Dissipator>,
}

impl LindbladModel {
    pub fn new(space: &SpaceRef) -> Self {
        Self { space: space.clone(), hamiltonian: Vec::new(), dissipators: Vec::new() }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    fn check(&self, op: &Operator) -> Result<()> {
        if op.space() != &self.space {
            return Err(CatError::SpaceMismatch);
        }
        Ok(())
    }

    pub fn add_hamiltonian(&mut self, label: &str, op: Operator, coeff: TimeCoefficient) -> Result<&mut Self> {
        self.push_hamiltonian(label, op, coeff, false)
    }

    pub fn add_drive(&mut self, label: &str, op: Operator, coeff: TimeCoefficient) -> Result<&mut Self> {
        self.push_hamiltonian(label, op, coeff, true)
    }

    fn push_hamiltonian(&mut self, label: &str, op: Operator, coeff: TimeCoefficient, drive: bool) -> Result<&mut Self> {
        self.check(&op)?;
        if op.hermitian_hint() != Some(true) && !op.is_hermitian(1e-10 * op.matrix().max_abs().max(1.0)) {
            return Err(CatError::NotHermitian(op.hermiticity_defect()));
        }
        if !coeff.is_real() {
            return Err(CatError::InvalidParameter(format!("Hamiltonian term `{label}` needs a real coefficient")));
        }
        self.hamiltonian.push(HamiltonianTerm { label: label.into(), op, coeff, drive });
        Ok(self)
    }

    pub fn add_dissipator(&mut self, label: &str, rate: f64, op: Operator) -> Result<&mut Self> {
        self.add_dissipator_sum(label, rate, vec![(op, TimeCoefficient::one())], false)
    }

    pub fn add_dissipator_sum(&mut self, label: &str, rate: f64, terms: Vec<(Operator, TimeCoefficient)>, drive: bool) -> Result<&mut Self> {
        if !(rate >= 0.0) || terms.is_empty() {
            return Err(CatError::InvalidParameter(format!("dissipator `{label}` needs a non-negative rate and at least one term")));
        }
        for (o, _) in &terms {
            self.check(o)?;
        }
        if rate > 0.0 {
            self.dissipators.push(Dissipator { label: label.into(), rate, terms, drive });
        }
        Ok(self)
    }

    pub fn dissipator(&self, label: &str) -> Option<&Dissipator> {
        self.dissipators.iter().find(|d| d.label == label)
    }

    /// Copy with every drive term removed.
    pub fn undriven(&self) -> Self {
        Self {
            space: self.space.clone(),
            hamiltonian: self.hamiltonian.iter().filter(|h| !h.drive).cloned().collect(),
            dissipators: self.dissipators.iter().filter(|d| !d.drive).cloned().collect(),
        }
    }

    pub fn hamiltonian_at(&self, t: f64) -> CsrMatrix {
        let d = self.space.dim();
        let mut m = CsrMatrix::zeros(d, d);
        for h in &self.hamiltonian {
            m = m.add_scaled(h.op.matrix(), h.coeff.eval(t));
        }
        m
    }

    /// Largest Hermiticity defect of H(t) at t = 0, T/2, T.
    pub fn check_hermitian(&self, t_end: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in [0.0, 0.5 * t_end, t_end] {
            let h = self.hamiltonian_at(t);
            let defect = h.hermiticity_defect() / h.max_abs().max(1.0);
            worst = worst.max(defect);
        }
        if worst > 1e-10 {
            return Err(CatError::NotHermitian(worst));
        }
        Ok(worst)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.hamiltonian.iter().flat_map(|h| h.coeff.breakpoints()).collect();
        for d in &self.dissipators {
            v.extend(d.terms.iter().flat_map(|(_, c)| c.breakpoints()));
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }

    pub fn generator(&self) -> Generator {
        Generator::new(self, &vec![1.0; self.dissipators.len()], 0.0)
    }
}

/// Right-hand side of the master equation, or of an unnormalized
/// no-detection flow when some sandwich terms are dropped.
///
/// With `K = −iH − ½ Σ L†L − ½ r` the flow is `dρ = M + M†` where
/// `M = Kρ + ½ Σ w L ρ L†`; `w` is the fraction of each channel that is not
/// monitored and `r` an extra uniform decay (dark counts).
pub struct Generator {
    dim: usize,
    k: MergedSum,
    k_coeffs: Vec<(KCoef, Complex64)>,
    jumps: Vec<Jump>,
    scratch: Vec<Complex64>,
    scratch2: Vec<Complex64>,
    coeff_buf: Vec<Complex64>,
}

enum KCoef {
    Ham(TimeCoefficient),
    Pair(TimeCoefficient, TimeCoefficient),
    Const,
}

struct Jump {
    weight: f64,
    sum: MergedSum,
    coeffs: Vec<TimeCoefficient>,
    buf: Vec<Complex64>,
}

impl Generator {
    pub fn new(model: &LindbladModel, recycle: &[f64], extra_decay: f64) -> Self {
        let dim = model.space.dim();
        let mut terms = Vec::new();
        let mut k_coeffs = Vec::new();
        for h in &model.hamiltonian {
            terms.push(h.op.matrix().clone());
            k_coeffs.push((KCoef::Ham(h.coeff.clone()), Complex64::new(0.0, -1.0)));
        }
        let mut jumps = Vec::new();
        for (d, &w) in model.dissipators.iter().zip(recycle) {
            let scale = Complex64::new(-0.5 * d.rate, 0.0);
            if d.is_static() {
                let l = d.operator_at(0.0);
                terms.push(l.adjoint().matmul(&l));
                k_coeffs.push((KCoef::Const, scale));
            } else {
                for (oj, cj) in &d.terms {
                    for (ok, ck) in &d.terms {
                        terms.push(oj.matrix().adjoint().matmul(ok.matrix()));
                        k_coeffs.push((KCoef::Pair(cj.clone(), ck.clone()), scale));
                    }
                }
            }
            if w > 0.0 {
                let ops: Vec<CsrMatrix> = d.terms.iter().map(|(o, _)| o.matrix().scale(Complex64::new(d.rate.sqrt(), 0.0))).collect();
                let coeffs: Vec<TimeCoefficient> = d.terms.iter().map(|(_, c)| c.clone()).collect();
                let n = ops.len();
                jumps.push(Jump { weight: w, sum: MergedSum::new(ops, dim, dim), coeffs, buf: vec![ZERO; n] });
            }
        }
        if extra_decay > 0.0 {
            terms.push(CsrMatrix::identity(dim));
            k_coeffs.push((KCoef::Const, Complex64::new(-0.5 * extra_decay, 0.0)));
        }
        let n = terms.len();
        let mut g = Self {
            dim,
            k: MergedSum::new(terms, dim, dim),
            k_coeffs,
            jumps,
            scratch: vec![ZERO; dim * dim],
            scratch2: vec![ZERO; dim * dim],
            coeff_buf: vec![ZERO; n],
        };
        g.assemble(0.0);
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn assemble(&mut self, t: f64) {
        for (slot, (kind, s)) in self.coeff_buf.iter_mut().zip(&self.k_coeffs) {
            *slot = match kind {
                KCoef::Ham(c) => c.eval(t) * s,
                KCoef::Pair(cj, ck) => cj.eval(t).conj() * ck.eval(t) * s,
                KCoef::Const => *s,
            };
        }
        self.k.assemble(&self.coeff_buf);
        for j in &mut self.jumps {
            for (b, c) in j.buf.iter_mut().zip(&j.coeffs) {
                *b = c.eval(t);
            }
            j.sum.assemble(&j.buf);
        }
    }

    /// Effective non-Hermitian generator K(t).
    pub fn k_at(&mut self, t: f64) -> &CsrMatrix {
        self.assemble(t);
        self.k.current()
    }

    /// dρ/dt for a Hermitian row-major ρ.
    pub fn rhs_density(&mut self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        self.assemble(t);
        let n = self.dim;
        self.k.current().mul_dense_into(rho, n, &mut self.scratch, ONE, false);
        for j in &self.jumps {
            let l = j.sum.current();
            l.mul_dense_into(rho, n, out, ONE, false);
            adjoint_dense_into(out, n, &mut self.scratch2);
            l.mul_dense_into(&self.scratch2, n, &mut self.scratch, Complex64::new(0.5 * j.weight, 0.0), true);
        }
        for i in 0..n {
            for k in i..n {
                let a = self.scratch[i * n + k];
                let b = self.scratch[k * n + i];
                let v = a + b.conj();
                out[i * n + k] = v;
                out[k * n + i] = v.conj();
            }
        }
    }

    /// dψ/dt = K(t) ψ for the no-jump ket flow.
    pub fn rhs_ket(&mut self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        self.assemble(t);
        self.k.current().mul_vec_into(psi, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::FockOp;
    use crate::space::HilbertSpace;

    #[test]
    fn rhs_matches_dense_lindbladian() {
        let s = HilbertSpace::bosonic(&[("a", 4), ("b", 3)]).unwrap();
        let a = Operator::a(&s, "a").unwrap();
        let b = Operator::a(&s, "b").unwrap();
        let x = Operator::fock(&s, "a", FockOp::X).unwrap();
        let hab = a.mul(&a).unwrap().mul(&b.dag()).unwrap();
        let hab = hab.add(&hab.dag()).unwrap();
        let mut m = LindbladModel::new(&s);
        m.add_hamiltonian("hab", hab.clone(), TimeCoefficient::constant(0.7)).unwrap();
        m.add_drive("x", x.clone(), TimeCoefficient::constant(0.3)).unwrap();
        m.add_dissipator("b", 2.0, b.clone()).unwrap();
        let mut g = m.generator();
        let d = s.dim();
        // random Hermitian rho
        let mut rho = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = Complex64::new(((i * 7 + j * 3) % 5) as f64 * 0.1, if i == j { 0.0 } else { ((i + 2 * j) % 3) as f64 * 0.05 });
                rho[i * d + j] = v;
                rho[j * d + i] = v.conj();
            }
        }
        let mut out = vec![ZERO; d * d];
        g.rhs_density(0.0, &rho, &mut out);
        let r = nalgebra::DMatrix::from_row_slice(d, d, &rho);
        let h = (hab.to_dense() * Complex64::new(0.7, 0.0)) + x.to_dense() * Complex64::new(0.3, 0.0);
        let l = b.to_dense() * Complex64::new(2f64.sqrt(), 0.0);
        let ld = l.adjoint();
        let i = Complex64::i();
        let expect = -(&h * &r - &r * &h) * i + &l * &r * &ld - (&ld * &l * &r + &r * &ld * &l) * Complex64::new(0.5, 0.0);
        let got = nalgebra::DMatrix::from_row_slice(d, d, &out);
        assert!((got - expect).camax() < 1e-12);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let s = HilbertSpace::bosonic(&[("a", 4)]).unwrap();
        let a = Operator::a(&s, "a").unwrap();
        let mut m = LindbladModel::new(&s);
        assert!(m.add_hamiltonian("bad", a, TimeCoefficient::one()).is_err());
    }
}
