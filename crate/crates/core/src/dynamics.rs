use num_complex::Complex64;

use crate::coefficient::TimeCoefficient;
use crate::error::{CatError, Result};
use crate::model::LindbladModel;
use crate::ode::{Stepper, Tolerances};
use crate::operator::Operator;
use crate::state::{CatCode, QuantumState};

/// Trace drift that aborts an integration.
pub const TRACE_ABORT: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct LeakageProbe {
    pub label: String,
    pub code: CatCode,
}

#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    pub tol: Tolerances,
    pub leakage: Option<LeakageProbe>,
}

impl EvolveOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { tol: Tolerances { rtol, atol: rtol * 1e-2, ..Tolerances::default() }, leakage: None }
    }

    pub fn leakage_of(mut self, label: &str, code: CatCode) -> Self {
        self.leakage = Some(LeakageProbe { label: label.to_string(), code });
        self
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// Observable label and its expectation at every stored time, in input order.
    pub expectations: Vec<(String, Vec<Complex64>)>,
    pub final_state: QuantumState,
    pub leakage: Vec<f64>,
    pub steps: usize,
}

impl EvolutionResult {
    pub fn series(&self, label: &str) -> Option<&[Complex64]> {
        self.expectations.iter().find(|(l, _)| l == label).map(|(_, v)| v.as_slice())
    }

    pub fn real_series(&self, label: &str) -> Option<Vec<f64>> {
        self.series(label).map(|v| v.iter().map(|c| c.re).collect())
    }
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CatError::InvalidParameter("time grid must be non-empty and strictly increasing".into()));
    }
    Ok(())
}

/// Merged stop list: grid times and coefficient breakpoints inside the grid.
pub(crate) fn stop_times(t_grid: &[f64], breakpoints: &[f64]) -> Vec<(f64, bool)> {
    let (t0, t1) = (t_grid[0], *t_grid.last().unwrap());
    let mut stops: Vec<(f64, bool)> = t_grid.iter().map(|&t| (t, true)).collect();
    for &b in breakpoints {
        if b > t0 && b < t1 && !t_grid.iter().any(|&t| (t - b).abs() < 1e-12) {
            stops.push((b, false));
        }
    }
    stops.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    stops
}

/// Integrates the master equation and samples observables on `t_grid`.
/// The first grid time is the initial time.
pub fn evolve(
    model: &LindbladModel,
    initial: &QuantumState,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    if initial.space() != model.space() || observables.iter().any(|(_, o)| o.space() != model.space()) {
        return Err(CatError::SpaceMismatch);
    }
    check_grid(t_grid)?;
    let space = model.space().clone();
    let d = space.dim();
    let mut gen = model.generator();
    let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| gen.rhs_density(t, y, dy);
    let mut stepper = Stepper::new(t_grid[0], initial.density(), opts.tol);
    let mut expectations: Vec<(String, Vec<Complex64>)> = observables.iter().map(|(l, _)| (l.clone(), Vec::with_capacity(t_grid.len()))).collect();
    let mut leakage = Vec::with_capacity(t_grid.len());
    let record = |t: f64, rho: &[Complex64], exps: &mut Vec<(String, Vec<Complex64>)>, leak: &mut Vec<f64>| -> Result<()> {
        let tr: f64 = (0..d).map(|i| rho[i * d + i].re).sum();
        if !tr.is_finite() || (tr - 1.0).abs() > TRACE_ABORT {
            return Err(CatError::TraceDrift { t, drift: (tr - 1.0).abs() });
        }
        for ((_, series), (_, op)) in exps.iter_mut().zip(observables) {
            series.push(op.matrix().trace_product(rho));
        }
        if let Some(p) = &opts.leakage {
            let st = QuantumState::from_density(&space, rho.to_vec())?;
            leak.push(p.code.leakage(&st.reduced(&p.label)?));
        }
        Ok(())
    };
    record(t_grid[0], &stepper.y, &mut expectations, &mut leakage)?;
    for (t, is_grid) in stop_times(t_grid, &model.breakpoints()).into_iter().skip(1) {
        stepper.advance_to(&mut f, t)?;
        if is_grid {
            record(t, &stepper.y, &mut expectations, &mut leakage)?;
        } else {
            let y = std::mem::take(&mut stepper.y);
            stepper.reset(t, y);
        }
    }
    let final_state = QuantumState::from_density(model.space(), stepper.y.clone())?;
    Ok(EvolutionResult { times: t_grid.to_vec(), expectations, final_state, leakage, steps: stepper.steps })
}

#[derive(Clone, Debug)]
pub struct Reconvergence {
    pub result: EvolutionResult,
    pub converged: bool,
    pub time: f64,
}

#[derive(Clone, Debug)]
pub struct ReconvergeOptions {
    pub tolerance: f64,
    pub check_interval: f64,
    pub max_time: f64,
    /// Model time at which reconvergence starts.
    pub t_start: f64,
    /// Bosonic mode whose population must also vanish (the buffer).
    pub buffer: Option<String>,
}

/// Evolves an undriven model until codespace leakage and buffer population
/// drop below the tolerance, or the time cap is hit.
pub fn reconverge(model: &LindbladModel, state: &QuantumState, opts: &ReconvergeOptions, evolve_opts: &EvolveOptions) -> Result<Reconvergence> {
    let probe = evolve_opts
        .leakage
        .clone()
        .ok_or_else(|| CatError::InvalidParameter("reconvergence needs a leakage probe".into()))?;
    let buffer_n = match &opts.buffer {
        Some(l) => Some(Operator::n(model.space(), l)?),
        None => None,
    };
    let done = |s: &QuantumState| -> Result<bool> {
        let leak = probe.code.leakage(&s.reduced(&probe.label)?);
        let nb = match &buffer_n {
            Some(n) => s.expectation(n)?.re,
            None => 0.0,
        };
        Ok(leak < opts.tolerance && nb < opts.tolerance)
    };
    let mut current = state.clone().into_density();
    let mut t = 0.0;
    let mut steps = 0;
    let mut converged = done(&current)?;
    while !converged && t < opts.max_time {
        let dt = opts.check_interval.min(opts.max_time - t);
        let t0 = opts.t_start + t;
        let r = evolve(model, &current, &[t0, t0 + dt], &[], evolve_opts)?;
        steps += r.steps;
        current = r.final_state;
        t += dt;
        converged = done(&current)?;
    }
    let leak = probe.code.leakage(&current.reduced(&probe.label)?);
    let result = EvolutionResult { times: vec![t], expectations: Vec::new(), final_state: current, leakage: vec![leak], steps };
    Ok(Reconvergence { result, converged, time: t })
}

/// Mean cat and buffer amplitudes from the linearized buffer equations
/// ã' = −iνb − iεσ, b' = −iνã − κ_b b/2 with ν = 2αg₂, and ⟨a⟩ = σ(α + ã).
pub fn analytic_buffer_trajectory(
    g2: f64,
    kappa_b: f64,
    alpha: f64,
    epsilon: &TimeCoefficient,
    t_grid: &[f64],
    sigma_z: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_grid(t_grid)?;
    let nu = 2.0 * alpha * g2;
    let i = Complex64::i();
    let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let eps = epsilon.eval(t);
        dy[0] = -i * nu * y[1] - i * eps * sigma_z;
        dy[1] = -i * nu * y[0] - 0.5 * kappa_b * y[1];
    };
    let tol = Tolerances { rtol: 1e-10, atol: 1e-13, ..Tolerances::default() };
    let mut stepper = Stepper::new(t_grid[0], vec![Complex64::new(0.0, 0.0); 2], tol);
    let mut a = Vec::with_capacity(t_grid.len());
    let mut b = Vec::with_capacity(t_grid.len());
    let push = |y: &[Complex64], a: &mut Vec<Complex64>, b: &mut Vec<Complex64>| {
        a.push((y[0] + alpha) * sigma_z);
        b.push(y[1]);
    };
    push(&stepper.y, &mut a, &mut b);
    for (t, is_grid) in stop_times(t_grid, &epsilon.breakpoints()).into_iter().skip(1) {
        stepper.advance_to(&mut f, t)?;
        if is_grid {
            push(&stepper.y, &mut a, &mut b);
        } else {
            let y = std::mem::take(&mut stepper.y);
            stepper.reset(t, y);
        }
    }
    Ok((a, b))
}

pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![t0];
    }
    (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::HilbertSpace;

    #[test]
    fn buffer_decay_is_exponential() {
        let s = HilbertSpace::bosonic(&[("b", 4)]).unwrap();
        let b = Operator::a(&s, "b").unwrap();
        let mut m = LindbladModel::new(&s);
        m.add_dissipator("b", 2.0, b).unwrap();
        let init = QuantumState::basis(&s, &[1]).unwrap();
        let n = Operator::n(&s, "b").unwrap();
        let grid = linspace(0.0, 2.0, 11);
        let r = evolve(&m, &init, &grid, &[("n".into(), n)], &EvolveOptions::default()).unwrap();
        for (t, v) in grid.iter().zip(r.series("n").unwrap()) {
            assert!((v.re - (-2.0 * t).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn analytic_equilibrium() {
        let eps = TimeCoefficient::constant(0.05);
        let grid = linspace(0.0, 20.0, 5);
        let (_, b) = analytic_buffer_trajectory(1.0, 8.0, 2.0, &eps, &grid, 1.0).unwrap();
        let beq = -0.05 / 4.0;
        assert!((b.last().unwrap().re - beq).abs() < 1e-6 * beq.abs().max(1.0));
    }
}
