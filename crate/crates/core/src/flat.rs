//! Locally flat Z drives `H = ε_Z Σ c_n x^{2n+1}`, with x = a + a†.
//!
//! The coefficients minimize the energy variance of H over |α⟩ at fixed
//! mean energy, which makes the drive look like ε·sign(x) across each
//! coherent wavepacket.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::operator::Operator;
use crate::space::SpaceRef;

/// Largest supported polynomial order.
pub const MAX_ORDER: usize = 8;
/// Equilibrated linear systems with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Moments I_k = E[x^k] of a unit-variance Gaussian centered at 2α, from
/// I_{k+1} = 2α I_k + k I_{k−1}.
pub fn gaussian_moments(alpha: f64, k_max: usize) -> Vec<f64> {
    let mut m = Vec::with_capacity(k_max + 1);
    m.push(1.0);
    if k_max >= 1 {
        m.push(2.0 * alpha);
    }
    for k in 1..k_max {
        let next = 2.0 * alpha * m[k] + k as f64 * m[k - 1];
        m.push(next);
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatDriveProblem {
    pub order: usize,
    pub alpha: f64,
    pub theta: f64,
    pub gate_time: f64,
    pub epsilon_z: f64,
}

impl FlatDriveProblem {
    /// Problem at the standard Zeno drive strength ε_Z = θ/(4αT).
    pub fn standard(order: usize, alpha: f64, theta: f64, gate_time: f64) -> Self {
        Self { order, alpha, theta, gate_time, epsilon_z: theta / (4.0 * alpha * gate_time) }
    }

    /// Required Σ c_n I_{2n+1}.
    pub fn target(&self) -> f64 {
        self.theta / (2.0 * self.gate_time * self.epsilon_z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatDriveSolution {
    pub problem: FlatDriveProblem,
    pub coefficients: Vec<f64>,
    pub lagrange_multiplier: f64,
    /// Energy variance ε_Z²(Σ c_n c_m I_{2n+2m+2} − (Σ c_n I_{2n+1})²).
    pub variance: f64,
    pub moments: Vec<f64>,
    pub condition: f64,
}

impl FlatDriveSolution {
    /// ε_Z Σ c_n x^{2n+1}.
    pub fn profile(&self, x: f64) -> f64 {
        self.problem.epsilon_z * odd_polynomial(&self.coefficients, x)
    }

    /// Mean energy ε_Z Σ c_n I_{2n+1}.
    pub fn mean_energy(&self) -> f64 {
        self.problem.epsilon_z * self.coefficients.iter().enumerate().map(|(n, c)| c * self.moments[2 * n + 1]).sum::<f64>()
    }
}

pub fn odd_polynomial(c: &[f64], x: f64) -> f64 {
    let x2 = x * x;
    let mut p = 0.0;
    for &cn in c.iter().rev() {
        p = p * x2 + cn;
    }
    p * x
}

fn check_problem(p: &FlatDriveProblem) -> Result<()> {
    if !(p.alpha > 0.0 && p.alpha.is_finite()) {
        return Err(CatError::InvalidParameter(format!("flat drive needs a real positive α, got {}", p.alpha)));
    }
    if !(p.gate_time > 0.0) || !(p.epsilon_z != 0.0 && p.epsilon_z.is_finite()) || !p.theta.is_finite() {
        return Err(CatError::InvalidParameter("flat drive needs T > 0, finite θ and nonzero ε_Z".into()));
    }
    if p.order > MAX_ORDER {
        return Err(CatError::InvalidParameter(format!("order {} above the supported maximum {MAX_ORDER}", p.order)));
    }
    Ok(())
}

/// Solves the stationarity conditions of the constrained variance
/// minimization with a full-pivot LU and one round of refinement.
pub fn solve_flat_drive(problem: &FlatDriveProblem) -> Result<FlatDriveSolution> {
    check_problem(problem)?;
    let n = problem.order + 1;
    let moments = gaussian_moments(problem.alpha, 4 * problem.order + 4);
    let target = problem.target();
    let size = n + 1;
    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut y = DVector::<f64>::zeros(size);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 2.0 * moments[2 * i + 2 * j + 2];
        }
        a[(i, n)] = moments[2 * i + 1];
        a[(n, i)] = moments[2 * i + 1];
    }
    y[n] = target;

    // symmetric diagonal equilibration
    let scale: Vec<f64> = (0..size).map(|i| if i < n { a[(i, i)].sqrt().recip() } else { 1.0 / moments[1] }).collect();
    let d = DMatrix::from_fn(size, size, |i, j| a[(i, j)] * scale[i] * scale[j]);
    let sv = d.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_CONDITION) {
        return Err(CatError::IllConditioned { what: "flat-drive linear system", cond: condition });
    }
    let rhs = DVector::from_fn(size, |i, _| y[i] * scale[i]);
    let lu = d.clone().full_piv_lu();
    let mut z = lu.solve(&rhs).ok_or(CatError::IllConditioned { what: "flat-drive linear system", cond: f64::INFINITY })?;
    let r = &rhs - &d * &z;
    if let Some(dz) = lu.solve(&r) {
        z += dz;
    }
    let residual = (&rhs - &d * &z).norm() / rhs.norm();
    if residual > 1e-10 {
        return Err(CatError::IllConditioned { what: "flat-drive residual", cond: residual });
    }
    let x: Vec<f64> = (0..size).map(|i| z[i] * scale[i]).collect();
    let coefficients = x[..n].to_vec();
    let mut second = 0.0;
    let mut first = 0.0;
    for i in 0..n {
        first += coefficients[i] * moments[2 * i + 1];
        for j in 0..n {
            second += coefficients[i] * coefficients[j] * moments[2 * i + 2 * j + 2];
        }
    }
    let eps2 = problem.epsilon_z * problem.epsilon_z;
    Ok(FlatDriveSolution {
        problem: *problem,
        coefficients,
        // stationarity reads 2Mc − λb = 0
        lagrange_multiplier: -x[n],
        variance: eps2 * (second - first * first),
        moments,
        condition,
    })
}

/// Operator ε_Z Σ c_n x^{2n+1} on one bosonic mode.
pub fn flat_hamiltonian_operator(solution: &FlatDriveSolution, space: &SpaceRef, label: &str) -> Result<Operator> {
    let p = &solution.problem;
    let dim = space.mode(label)?.dim;
    let needed = (4.0 * p.alpha * p.alpha).ceil() as usize + 4 * p.order;
    if dim < needed {
        return Err(CatError::InvalidDimension { label: label.to_string(), dim, reason: "flat drive needs dim ≥ 4|α|² + 4N" });
    }
    let mut h = Operator::zero(space);
    for (k, &c) in solution.coefficients.iter().enumerate() {
        h = h.add(&Operator::x_power(space, label, 2 * k as u32 + 1)?.scale_re(c * p.epsilon_z))?;
    }
    let defect = h.hermiticity_defect() / h.matrix().max_abs().max(f64::MIN_POSITIVE);
    if defect > 1e-9 {
        return Err(CatError::NotHermitian(defect));
    }
    Ok(h.with_hermitian_hint(true))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtsReport {
    /// |ε_Z c_k| per order.
    pub required: Vec<f64>,
    /// 2E_J ε_k φ_a^{2k+1}/(2k+1)! per order.
    pub achievable: Vec<f64>,
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
}

/// Compares the drive strengths the flat solution needs with what a sine
/// potential pumped at amplitudes `pumps` can supply at each odd order.
/// `ej` and ε_Z must share units.
pub fn ats_feasibility(ej: f64, phi_a: f64, pumps: &[f64], solution: &FlatDriveSolution) -> Result<AtsReport> {
    if pumps.len() < solution.coefficients.len() {
        return Err(CatError::InvalidParameter(format!("need {} pump amplitudes, got {}", solution.coefficients.len(), pumps.len())));
    }
    let mut required = Vec::new();
    let mut achievable = Vec::new();
    let mut ratios = Vec::new();
    for (k, &c) in solution.coefficients.iter().enumerate() {
        let order = 2 * k + 1;
        let fact: f64 = (1..=order).map(|i| i as f64).product();
        let need = (solution.problem.epsilon_z * c).abs();
        let have = 2.0 * ej * pumps[k] * phi_a.powi(order as i32) / fact;
        required.push(need);
        achievable.push(have);
        ratios.push(if need > 0.0 { have / need } else { f64::INFINITY });
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AtsReport { required, achievable, ratios, min_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_moments() {
        let m = gaussian_moments(1.5, 4);
        assert_eq!(m[0], 1.0);
        assert_eq!(m[1], 3.0);
        assert!((m[2] - (9.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn order_zero_is_linear_drive() {
        let s = solve_flat_drive(&FlatDriveProblem::standard(0, 2.0, std::f64::consts::PI, 10.0)).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_excess_order() {
        assert!(solve_flat_drive(&FlatDriveProblem::standard(9, 2.0, 1.0, 1.0)).is_err());
    }
}
