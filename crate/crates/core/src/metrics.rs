//! Logical error extraction and fits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, linspace, EvolveOptions};
use crate::error::{CatError, Result};
use crate::gates::{build, DriveProfile, GateSpec};
use crate::ode::Tolerances;
use crate::state::{CatCode, Logical, QuantumState};
use crate::stochastic::{logical_block, no_jump_evolve, rotated_fidelity};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Leakage above which the parity proxy is flagged as unreliable.
pub const LEAKAGE_FLAG: f64 = 0.1;

/// Clamps a probability that may be slightly outside [0, 1] numerically.
pub fn clamp_probability(p: f64) -> Result<f64> {
    if !(p >= -1e-9 && p <= 1.0 + 1e-9) {
        return Err(CatError::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub p_z: Option<f64>,
    pub p_x: Option<f64>,
    pub p_zc: Option<f64>,
    pub p_zt: Option<f64>,
    pub p_zczt: Option<f64>,
    pub leakage: f64,
    pub jump_probability: Option<f64>,
    pub flags: Vec<String>,
}

impl ErrorReport {
    /// Ratio of phase errors to a baseline report.
    pub fn mu(&self, baseline: &ErrorReport) -> Option<f64> {
        Some(self.p_z? / baseline.p_z?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseError {
    pub p_z: f64,
    pub leakage: f64,
    pub parity_based: bool,
    pub flagged: bool,
}

/// Phase error of the cat `label` after Z(sθ) applied to `initial`.
///
/// For |±⟩ and θ a multiple of π the parity proxy
/// `(1 − ⟨Π⟩/Π_ideal)/2` is used; otherwise the infidelity of the
/// normalized codespace block to the ideal output.
pub fn phase_error(state: &QuantumState, label: &str, code: &CatCode, theta: f64, rotation_sign: f64, initial: Logical) -> Result<PhaseError> {
    let rho = state.reduced(label)?;
    let leakage = code.leakage(&rho);
    let k = theta / std::f64::consts::PI;
    let multiple = (k - k.round()).abs() < 1e-12;
    let flagged = leakage > LEAKAGE_FLAG;
    if multiple && matches!(initial, Logical::Plus | Logical::Minus) {
        let start = if initial == Logical::Plus { 1.0 } else { -1.0 };
        let ideal = if (k.round() as i64) % 2 == 0 { start } else { -start };
        let d = rho.nrows();
        let parity: f64 = (0..d).map(|n| if n % 2 == 0 { rho[(n, n)].re } else { -rho[(n, n)].re }).sum();
        let p_z = clamp_probability(((1.0 - parity / ideal) / 2.0).clamp(-1e-9, 1.0 + 1e-9))?;
        return Ok(PhaseError { p_z, leakage, parity_based: true, flagged });
    }
    let p_z = codespace_infidelity(&rho, code, theta * rotation_sign, initial)?;
    Ok(PhaseError { p_z, leakage, parity_based: false, flagged })
}

/// 1 − F between the normalized codespace block and Z(φ)|initial⟩.
pub fn codespace_infidelity(rho: &DMatrix<Complex64>, code: &CatCode, phi: f64, initial: Logical) -> Result<f64> {
    let block = logical_block(code, rho);
    let tr = (block[(0, 0)] + block[(1, 1)]).re;
    if !(tr > 0.0) {
        return Err(CatError::InvalidParameter("state has no codespace population".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |x: f64| Complex64::new(x, 0.0);
    let v = match initial {
        Logical::Zero => [c(1.0), c(0.0)],
        Logical::One => [c(0.0), c(1.0)],
        Logical::Plus => [c(s), c(s)],
        Logical::Minus => [c(s), c(-s)],
    };
    // rotated_fidelity evaluates ⟨v|R(φ) ρ R(φ)†|v⟩ = ⟨R(φ)†v|ρ|R(φ)†v⟩,
    // so rotating by −φ compares ρ with Z(φ)|v⟩.
    let f = rotated_fidelity(&block, &v, -phi) / tr;
    clamp_probability((1.0 - f).clamp(-1e-9, 1.0 + 1e-9))
}

/// Conserved bit observable of `D[a² − α²]` on a truncated mode.
#[derive(Clone, Debug)]
pub struct BitInvariant {
    pub alpha: f64,
    /// Dense d×d Hermitian operator, +1 on |0⟩ and −1 on |1⟩.
    pub j: DMatrix<Complex64>,
    /// Smallest and next singular value of the restricted adjoint generator.
    pub kernel_gap: (f64, f64),
}

impl BitInvariant {
    /// Finds the invariant in the even-row, odd-column parity block of the
    /// adjoint Liouvillian, where the conserved coherence lives alone.
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if dim < 6 {
            return Err(CatError::InvalidDimension { label: "a".into(), dim, reason: "bit invariant needs at least 6 levels" });
        }
        let a = crate::operator::local_annihilation(dim).to_dense();
        let l = &a * &a - DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(alpha * alpha, 0.0);
        let ld = l.adjoint();
        let ldl = &ld * &l;
        let even: Vec<usize> = (0..dim).step_by(2).collect();
        let odd: Vec<usize> = (1..dim).step_by(2).collect();
        let (ne, no) = (even.len(), odd.len());
        let sub = |m: &DMatrix<Complex64>, r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| m[(r[i], c[j])]);
        let ld_ee = sub(&ld, &even, &even);
        let l_oo = sub(&l, &odd, &odd);
        let ldl_ee = sub(&ldl, &even, &even);
        let ldl_oo = sub(&ldl, &odd, &odd);
        // row-major vec: vec(A X B) = (A ⊗ Bᵀ) vec(X)
        let half = Complex64::new(0.5, 0.0);
        let m = ld_ee.kronecker(&l_oo.transpose())
            - ldl_ee.kronecker(&DMatrix::identity(no, no)) * half
            - DMatrix::<Complex64>::identity(ne, ne).kronecker(&ldl_oo.transpose()) * half;
        let svd = m.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().ok_or(CatError::Fit("SVD failed".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap());
        let smax = svd.singular_values.max();
        let (s0, s1) = (svd.singular_values[order[0]], svd.singular_values[order[1]]);
        if !(s0 < 1e-8 * smax && s1 > 1e-4 * smax) {
            let kernel = 2 + 2 * order.iter().take_while(|&&k| svd.singular_values[k] < 1e-8 * smax).count();
            return Err(CatError::Truncation { defect: s0 / smax, limit: 1e-8 }).map_err(|e| match kernel {
                4 => e,
                k => CatError::InvalidParameter(format!("adjoint kernel dimension {k} ≠ 4: truncation {dim} too small for α = {alpha}")),
            });
        }
        let row = v_t.row(order[0]);
        let mut k = DMatrix::from_element(dim, dim, ZERO);
        for (i, &e) in even.iter().enumerate() {
            for (j, &o) in odd.iter().enumerate() {
                k[(e, o)] = row[i * no + j].conj();
            }
        }
        let code = CatCode::new(dim, Complex64::new(alpha, 0.0))?;
        let p = nalgebra::DVector::from_vec(code.plus.clone());
        let mn = nalgebra::DVector::from_vec(code.minus.clone());
        let norm = (p.adjoint() * &k * &mn)[(0, 0)];
        if norm.norm() < 1e-12 {
            return Err(CatError::Fit("bit invariant has no codespace overlap".into()));
        }
        let k = k / norm;
        let j = &k + k.adjoint();
        Ok(Self { alpha, j, kernel_gap: (s0 / smax, s1 / smax) })
    }

    pub fn expectation(&self, rho: &DMatrix<Complex64>) -> f64 {
        (&self.j * rho).trace().re
    }
}

/// Bit-flip probability relative to the well of `initial` (|0⟩ or |1⟩).
pub fn bit_error(state: &QuantumState, label: &str, invariant: &BitInvariant, initial: Logical) -> Result<f64> {
    let sign = match initial {
        Logical::Zero => 1.0,
        Logical::One => -1.0,
        _ => return Err(CatError::InvalidParameter("bit error needs |0⟩ or |1⟩ as initial state".into())),
    };
    let rho = state.reduced(label)?;
    if rho.nrows() != invariant.j.nrows() {
        return Err(CatError::SpaceMismatch);
    }
    clamp_probability(((1.0 - sign * invariant.expectation(&rho)) / 2.0).clamp(-1e-9, 1.0 + 1e-9))
}

/// First-order non-adiabatic phase error of a Zeno Z(θ) gate,
/// θ²/(16|α|⁴κ₂T).
pub fn zeno_phase_error(theta: f64, alpha2: f64, kappa_2: f64, gate_time: f64) -> f64 {
    theta * theta / (16.0 * alpha2 * alpha2 * kappa_2 * gate_time)
}

/// Control phase error of a Zeno CNOT, π²/(16|α|²κ₂T).
pub fn zeno_cnot_control_error(alpha2: f64, kappa_2: f64, gate_time: f64) -> f64 {
    std::f64::consts::PI.powi(2) / (16.0 * alpha2 * kappa_2 * gate_time)
}

/// Phase-error probabilities of a CNOT started in |+, +⟩ from the control,
/// target and joint parities.
pub fn cnot_error_probabilities(parity_c: f64, parity_t: f64, parity_ct: f64) -> (f64, f64, f64) {
    let a = 0.5 * (1.0 - parity_c);
    let b = 0.5 * (1.0 - parity_t);
    let c = 0.5 * (1.0 - parity_ct);
    (0.5 * (a - b + c), 0.5 * (b - a + c), 0.5 * (a + b - c))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(CatError::Fit("linear fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CatError::Fit("degenerate abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(LinearFit { slope, intercept, residual })
}

/// Fits y = C·x^k through a log-log line; returns k in `slope`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(CatError::Fit("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Fits ln y = a + b·x; `slope` is b.
pub fn exponential_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(CatError::Fit("exponential fit needs positive data".into()));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(x, &ly)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub residual: f64,
    pub window: (f64, f64),
    /// Window was cut where the series stopped decreasing.
    pub shortened: bool,
}

/// Slope of γ(t) = −ln p_Z(t) over `t ≥ t_min`.
pub fn gamma_z_fit(times: &[f64], p_z: &[f64], t_min: f64) -> Result<GammaFit> {
    if times.len() != p_z.len() {
        return Err(CatError::Fit("times and p_Z differ in length".into()));
    }
    let start = times.iter().position(|&t| t >= t_min).ok_or_else(|| CatError::Fit("fit window is empty".into()))?;
    let mut end = p_z.len();
    let mut shortened = false;
    for i in start..p_z.len() {
        let stalled = i > start && p_z[i] >= p_z[i - 1];
        if !(p_z[i] > 0.0) || stalled {
            end = i;
            shortened = true;
            break;
        }
    }
    if end - start < 3 {
        return Err(CatError::Fit("fewer than three decreasing points in the fit window".into()));
    }
    let g: Vec<f64> = p_z[start..end].iter().map(|p| -p.ln()).collect();
    let fit = linear_fit(&times[start..end], &g)?;
    Ok(GammaFit { gamma: fit.slope, residual: fit.residual, window: (times[start], times[end - 1]), shortened })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    pub period: f64,
    pub frequency: f64,
    /// Initial envelope amplitude.
    pub amplitude: f64,
    pub decay_rate: f64,
    pub periods_observed: f64,
}

/// Period and envelope decay of an oscillating trace from its extrema.
pub fn rabi_fit(times: &[f64], signal: &[f64]) -> Result<RabiFit> {
    if times.len() != signal.len() || times.len() < 5 {
        return Err(CatError::Fit("rabi fit needs at least five paired points".into()));
    }
    let mut ext_t = Vec::new();
    let mut ext_v = Vec::new();
    for i in 1..signal.len() - 1 {
        let (a, b, c) = (signal[i - 1], signal[i], signal[i + 1]);
        if (b > a && b >= c) || (b < a && b <= c) {
            // vertex of the parabola through three equally spaced samples
            let h = times[i + 1] - times[i];
            let denom = a - 2.0 * b + c;
            let off = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            ext_t.push(times[i] + off * h);
            ext_v.push(b - 0.25 * (a - c) * off);
        }
    }
    let span = times[times.len() - 1] - times[0];
    if ext_t.len() < 2 {
        return Err(CatError::Fit("no oscillation found".into()));
    }
    let half: f64 = (ext_t[ext_t.len() - 1] - ext_t[0]) / (ext_t.len() - 1) as f64;
    let period = 2.0 * half;
    let periods_observed = span / period;
    if periods_observed < 3.0 {
        return Err(CatError::Fit(format!("only {periods_observed:.2} periods in window")));
    }
    let mags: Vec<f64> = ext_v.iter().map(|v| v.abs().max(1e-300)).collect();
    let fit = exponential_fit(&ext_t, &mags)?;
    Ok(RabiFit { period, frequency: 1.0 / period, amplitude: fit.intercept.exp(), decay_rate: -fit.slope, periods_observed })
}

/// Parity oscillation under a constant drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    pub times: Vec<f64>,
    pub parity: Vec<f64>,
    /// No-click probability, present for the conditional trace.
    pub survival: Option<Vec<f64>>,
}

impl RabiTrace {
    pub fn fit(&self) -> Result<RabiFit> {
        rabi_fit(&self.times, &self.parity)
    }
}

/// Drives a Z gate with constant Ω_Z = 4αε_Z for `t_max` and records the
/// cat parity from |+_L⟩. With `no_jump` the trace is conditioned on no
/// click in the detection channels; otherwise clicks are averaged with
/// their feedback.
pub fn rabi_trace(spec: &GateSpec, omega_z: f64, t_max: f64, n_points: usize, no_jump: bool, tol: Tolerances) -> Result<RabiTrace> {
    let mut spec = spec.clone();
    spec.theta = omega_z * t_max;
    spec.gate_time = t_max;
    spec.drive_profile = DriveProfile::Constant;
    let gate = build(&spec)?;
    let times = linspace(0.0, t_max, n_points);
    let obs = vec![("parity".to_string(), gate.parity()?)];
    let initial = gate.initial(Logical::Plus)?;
    if no_jump {
        let r = no_jump_evolve(&gate.model, &gate.channels, &initial, &times, &obs, &tol)?;
        let parity = r.series("parity").expect("parity recorded").iter().map(|c| c.re).collect();
        Ok(RabiTrace { times, parity, survival: Some(r.survival) })
    } else {
        let r = evolve(&gate.averaged_model()?, &initial, &times, &obs, &EvolveOptions { tol, leakage: None })?;
        Ok(RabiTrace { times, parity: r.real_series("parity").expect("parity recorded"), survival: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnot_probabilities_invert() {
        let (pc, pt, pct) = (0.01, 0.02, 0.003);
        let par_c = 1.0 - 2.0 * (pc + pct);
        let par_t = 1.0 - 2.0 * (pt + pct);
        let par_ct = 1.0 - 2.0 * (pc + pt);
        let (a, b, c) = cnot_error_probabilities(par_c, par_t, par_ct);
        assert!((a - pc).abs() < 1e-15 && (b - pt).abs() < 1e-15 && (c - pct).abs() < 1e-15);
    }

    #[test]
    fn gamma_of_exact_exponential() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let p: Vec<f64> = t.iter().map(|x| (-3.0 * x).exp()).collect();
        let g = gamma_z_fit(&t, &p, 0.0).unwrap();
        assert!((g.gamma - 3.0).abs() < 1e-6);
        assert!(!g.shortened);
    }

    #[test]
    fn rabi_of_damped_cosine() {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 0.005).collect();
        let s: Vec<f64> = t.iter().map(|x| (-0.05 * x).exp() * (std::f64::consts::PI * x).cos()).collect();
        let f = rabi_fit(&t, &s).unwrap();
        assert!((f.period - 2.0).abs() < 1e-3, "{}", f.period);
        assert!((f.decay_rate - 0.05).abs() < 1e-3, "{}", f.decay_rate);
    }
}
