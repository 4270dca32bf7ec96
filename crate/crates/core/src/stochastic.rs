//! Photon-counting unraveling with detection efficiency, dark counts and
//! instantaneous unitary feedback at every click.
//!
//! Jumps are sampled by the waiting-time method: the unnormalized
//! no-detection flow is integrated until its norm falls below a uniform
//! draw, the crossing time is located on the step interpolant and the step
//! is redone up to it.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{check_grid, evolve, stop_times, EvolveOptions};
use crate::error::{CatError, Result};
use crate::model::{Dissipator, Generator, LindbladModel};
use crate::ode::{Stepper, Tolerances};
use crate::operator::Operator;
use crate::sparse::{adjoint_dense_into, CsrMatrix};
use crate::state::{CatCode, QuantumState, StateData};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Buffer populations below this make a forced jump unphysical.
pub const MIN_JUMP_POPULATION: f64 = 1e-12;

/// A monitored dissipator of the model.
#[derive(Clone, Debug)]
pub struct DetectionChannel {
    /// Label of the monitored dissipator.
    pub dissipator: String,
    pub efficiency: f64,
    pub dark_count_rate: f64,
    /// Unitary applied after every click, true or dark.
    pub feedback: Option<Operator>,
}

impl DetectionChannel {
    pub fn new(dissipator: &str, efficiency: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(CatError::InvalidParameter(format!("detection efficiency {efficiency} outside [0, 1]")));
        }
        Ok(Self { dissipator: dissipator.to_string(), efficiency, dark_count_rate: 0.0, feedback: None })
    }

    pub fn with_feedback(mut self, unitary: Operator) -> Result<Self> {
        let defect = unitary.unitarity_defect();
        if defect > 1e-10 {
            return Err(CatError::InvalidParameter(format!("feedback operator is not unitary (defect {defect:.2e})")));
        }
        self.feedback = Some(unitary);
        Ok(self)
    }

    pub fn with_dark_counts(mut self, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(CatError::InvalidParameter(format!("dark count rate {rate} is negative")));
        }
        self.dark_count_rate = rate;
        Ok(self)
    }

    fn resolve<'m>(&self, model: &'m LindbladModel) -> Result<(usize, &'m Dissipator)> {
        let idx = model
            .dissipators
            .iter()
            .position(|d| d.label == self.dissipator)
            .ok_or_else(|| CatError::InvalidParameter(format!("no dissipator `{}` to monitor", self.dissipator)))?;
        if let Some(u) = &self.feedback {
            if u.space() != model.space() {
                return Err(CatError::SpaceMismatch);
            }
        }
        Ok((idx, &model.dissipators[idx]))
    }
}

fn validate_channels(model: &LindbladModel, channels: &[DetectionChannel]) -> Result<Vec<usize>> {
    let mut seen = Vec::new();
    for c in channels {
        let (idx, _) = c.resolve(model)?;
        if seen.contains(&idx) {
            return Err(CatError::InvalidParameter(format!("dissipator `{}` monitored twice", c.dissipator)));
        }
        seen.push(idx);
    }
    Ok(seen)
}

/// Deterministic model equal to the ensemble average of the monitored
/// dynamics: channel `(L, κ, η, U)` becomes `ηκ D[UL] + (1−η)κ D[L]` and
/// dark counts at rate r add `r D[U]`.
pub fn feedback_averaged_model(model: &LindbladModel, channels: &[DetectionChannel]) -> Result<LindbladModel> {
    validate_channels(model, channels)?;
    let mut out = model.clone();
    out.dissipators.clear();
    for d in &model.dissipators {
        let Some(c) = channels.iter().find(|c| c.dissipator == d.label) else {
            out.dissipators.push(d.clone());
            continue;
        };
        let Some(u) = &c.feedback else {
            out.dissipators.push(d.clone());
            continue;
        };
        let eta = c.efficiency;
        if eta < 1.0 {
            out.dissipators.push(Dissipator { rate: (1.0 - eta) * d.rate, ..d.clone() });
        }
        if eta > 0.0 {
            let terms = d.terms.iter().map(|(o, k)| Ok((u.mul(o)?, k.clone()))).collect::<Result<Vec<_>>>()?;
            out.dissipators.push(Dissipator { label: format!("{}_detected", d.label), rate: eta * d.rate, terms, drive: d.drive });
        }
        if c.dark_count_rate > 0.0 {
            out.add_dissipator(&format!("{}_dark", d.label), c.dark_count_rate, u.clone())?;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Unraveling {
    /// Conditional density matrix; unmonitored loss stays a Lindblad term.
    #[default]
    Density,
    /// Pure-state trajectories; unmonitored loss is unraveled as hidden
    /// jumps, so only ensemble averages are meaningful.
    Ket,
}

#[derive(Clone, Debug, Default)]
pub struct TrajectoryOptions {
    pub tol: Tolerances,
    pub unraveling: Unraveling,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    /// Index into the channel list.
    pub channel: usize,
    pub dark: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub expectations: Vec<(String, Vec<Complex64>)>,
    pub jumps: Vec<JumpRecord>,
    pub hidden_jumps: usize,
    /// Number of times a negative jump weight was clamped to zero.
    pub clamped: usize,
    pub final_state: QuantumState,
    pub steps: usize,
}

impl Trajectory {
    pub fn series(&self, label: &str) -> Option<&[Complex64]> {
        self.expectations.iter().find(|(l, _)| l == label).map(|(_, v)| v.as_slice())
    }
}

/// One way the conditional state can jump.
struct Branch {
    dissipator: Option<usize>,
    weight: f64,
    feedback: Option<CsrMatrix>,
    record: Option<(usize, bool)>,
}

struct Unravel {
    branches: Vec<Branch>,
    dark_total: f64,
}

fn branches(model: &LindbladModel, channels: &[DetectionChannel], ket: bool) -> Result<Unravel> {
    validate_channels(model, channels)?;
    let mut out = Vec::new();
    let mut dark_total = 0.0;
    for (ci, c) in channels.iter().enumerate() {
        let (idx, d) = c.resolve(model)?;
        let fb = c.feedback.as_ref().map(|u| u.matrix().clone());
        if c.efficiency > 0.0 {
            out.push(Branch { dissipator: Some(idx), weight: c.efficiency * d.rate, feedback: fb.clone(), record: Some((ci, false)) });
        }
        if ket && c.efficiency < 1.0 {
            out.push(Branch { dissipator: Some(idx), weight: (1.0 - c.efficiency) * d.rate, feedback: None, record: None });
        }
        if c.dark_count_rate > 0.0 {
            dark_total += c.dark_count_rate;
            out.push(Branch { dissipator: None, weight: c.dark_count_rate, feedback: fb, record: Some((ci, true)) });
        }
    }
    if ket {
        for (idx, d) in model.dissipators.iter().enumerate() {
            if !channels.iter().any(|c| c.dissipator == d.label) {
                out.push(Branch { dissipator: Some(idx), weight: d.rate, feedback: None, record: None });
            }
        }
    }
    Ok(Unravel { branches: out, dark_total })
}

fn recycle_weights(model: &LindbladModel, channels: &[DetectionChannel], ket: bool) -> Vec<f64> {
    model
        .dissipators
        .iter()
        .map(|d| {
            if ket {
                0.0
            } else {
                channels.iter().find(|c| c.dissipator == d.label).map_or(1.0, |c| 1.0 - c.efficiency)
            }
        })
        .collect()
}

/// Shape-aware helpers over a flat ket or row-major density.
#[derive(Clone, Copy)]
struct Layout {
    dim: usize,
    ket: bool,
}

impl Layout {
    fn norm(&self, y: &[Complex64]) -> f64 {
        if self.ket {
            y.iter().map(|v| v.norm_sqr()).sum()
        } else {
            (0..self.dim).map(|i| y[i * self.dim + i].re).sum()
        }
    }

    /// ⟨L†L⟩ in the unnormalized state.
    fn weight(&self, l: &CsrMatrix, y: &[Complex64], scratch: &mut [Complex64]) -> f64 {
        if self.ket {
            l.mul_vec_into(y, scratch);
            scratch[..self.dim].iter().map(|v| v.norm_sqr()).sum()
        } else {
            let n = self.dim;
            l.mul_dense_into(y, n, scratch, ONE, false);
            // Tr(Lρ L†) = Σ (Lρ)_ij conj(L_ij)
            l.iter().map(|(i, j, v)| scratch[i * n + j] * v.conj()).sum::<Complex64>().re
        }
    }

    /// y ← A y A† (or A y for kets), then normalized.
    fn apply(&self, a: &CsrMatrix, y: &mut Vec<Complex64>, s1: &mut [Complex64], s2: &mut [Complex64]) {
        if self.ket {
            a.mul_vec_into(y, s1);
            y.copy_from_slice(&s1[..self.dim]);
        } else {
            let n = self.dim;
            a.mul_dense_into(y, n, s1, ONE, false);
            adjoint_dense_into(s1, n, s2);
            a.mul_dense_into(s2, n, y, ONE, false);
        }
        let nrm = self.norm(y);
        let s = if self.ket { nrm.sqrt() } else { nrm };
        if s > 0.0 {
            y.iter_mut().for_each(|v| *v /= s);
        }
    }

    fn expect(&self, op: &Operator, y: &[Complex64], nrm: f64) -> Complex64 {
        let v = if self.ket { op.matrix().expectation_vec(y) } else { op.matrix().trace_product(y) };
        v / nrm
    }

    fn state(&self, model: &LindbladModel, y: Vec<Complex64>) -> Result<QuantumState> {
        let mut s = if self.ket { QuantumState::from_ket(model.space(), y)? } else { QuantumState::from_density(model.space(), y)? };
        s.normalize();
        Ok(s)
    }
}

fn initial_vector(initial: &QuantumState, ket: bool) -> Result<Vec<Complex64>> {
    match (initial.data(), ket) {
        (StateData::Ket(k), true) => Ok(k.clone()),
        (_, false) => Ok(initial.density()),
        (StateData::Density(_), true) => Err(CatError::InvalidParameter("ket unraveling needs a pure initial state".into())),
    }
}

/// Samples one monitored trajectory. Observables are recorded on the
/// normalized conditional state at every grid time.
pub fn sme_evolve(
    model: &LindbladModel,
    channels: &[DetectionChannel],
    initial: &QuantumState,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    rng: &mut impl Rng,
    opts: &TrajectoryOptions,
) -> Result<Trajectory> {
    if initial.space() != model.space() || observables.iter().any(|(_, o)| o.space() != model.space()) {
        return Err(CatError::SpaceMismatch);
    }
    check_grid(t_grid)?;
    let ket = opts.unraveling == Unraveling::Ket;
    let unravel = branches(model, channels, ket)?;
    let layout = Layout { dim: model.space().dim(), ket };
    let mut gen = Generator::new(model, &recycle_weights(model, channels, ket), unravel.dark_total);
    let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        if ket {
            gen.rhs_ket(t, y, dy)
        } else {
            gen.rhs_density(t, y, dy)
        }
    };
    let y0 = initial_vector(initial, ket)?;
    let len = y0.len();
    let mut s1 = vec![ZERO; len];
    let mut s2 = vec![ZERO; len];
    let mut probe = vec![ZERO; len];
    let mut stepper = Stepper::new(t_grid[0], y0, opts.tol);
    let n0 = layout.norm(&stepper.y);
    stepper.y.iter_mut().for_each(|v| *v /= if ket { n0.sqrt() } else { n0 });

    let mut expectations: Vec<(String, Vec<Complex64>)> = observables.iter().map(|(l, _)| (l.clone(), Vec::with_capacity(t_grid.len()))).collect();
    let record = |y: &[Complex64], exps: &mut Vec<(String, Vec<Complex64>)>| {
        let nrm = layout.norm(y);
        for ((_, series), (_, op)) in exps.iter_mut().zip(observables) {
            series.push(layout.expect(op, y, nrm));
        }
    };
    record(&stepper.y, &mut expectations);

    let mut threshold: f64 = rng.random();
    let mut jumps = Vec::new();
    let mut hidden = 0;
    let mut clamped = 0;
    let mut weights = vec![0.0; unravel.branches.len()];

    for (t_stop, is_grid) in stop_times(t_grid, &model.breakpoints()).into_iter().skip(1) {
        while stepper.t < t_stop {
            stepper.advance(&mut f, t_stop)?;
            if layout.norm(&stepper.y) > threshold {
                continue;
            }
            // bisection for the crossing on the step interpolant
            let (mut lo, mut hi) = (stepper.t_prev, stepper.t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                stepper.interpolate(mid, &mut probe);
                if layout.norm(&probe) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-13 * hi.abs().max(1.0) {
                    break;
                }
            }
            let t_jump = hi;
            if t_jump < stepper.t {
                stepper.restep_to(&mut f, t_jump)?;
            }
            let mut y = std::mem::take(&mut stepper.y);
            let mut total = 0.0;
            for (w, b) in weights.iter_mut().zip(&unravel.branches) {
                let raw = match b.dissipator {
                    Some(idx) => b.weight * layout.weight(&model.dissipators[idx].operator_at(t_jump), &y, &mut s1),
                    None => b.weight * layout.norm(&y),
                };
                if raw < 0.0 {
                    clamped += 1;
                }
                *w = raw.max(0.0);
                total += *w;
            }
            if total > 0.0 {
                let mut pick = rng.random::<f64>() * total;
                let mut chosen = weights.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    if pick < *w {
                        chosen = k;
                        break;
                    }
                    pick -= w;
                }
                let b = &unravel.branches[chosen];
                if let Some(idx) = b.dissipator {
                    layout.apply(&model.dissipators[idx].operator_at(t_jump), &mut y, &mut s1, &mut s2);
                }
                if let Some(u) = &b.feedback {
                    layout.apply(u, &mut y, &mut s1, &mut s2);
                }
                match b.record {
                    Some((channel, dark)) => jumps.push(JumpRecord { time: t_jump, channel, dark }),
                    None => hidden += 1,
                }
            }
            let nrm = layout.norm(&y);
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(CatError::TraceDrift { t: t_jump, drift: (nrm - 1.0).abs() });
            }
            y.iter_mut().for_each(|v| *v /= if ket { nrm.sqrt() } else { nrm });
            threshold = rng.random();
            stepper.reset(t_jump, y);
        }
        if is_grid {
            record(&stepper.y, &mut expectations);
            // rescale to unit norm so tolerances stay meaningful
            let nrm = layout.norm(&stepper.y);
            threshold /= nrm;
            let mut y = std::mem::take(&mut stepper.y);
            y.iter_mut().for_each(|v| *v /= if ket { nrm.sqrt() } else { nrm });
            stepper.reset(t_stop, y);
        } else {
            let y = std::mem::take(&mut stepper.y);
            stepper.reset(t_stop, y);
        }
    }
    let steps = stepper.steps;
    let final_state = layout.state(model, std::mem::take(&mut stepper.y))?;
    Ok(Trajectory { times: t_grid.to_vec(), expectations, jumps, hidden_jumps: hidden, clamped, final_state, steps })
}

/// Conditional evolution given that no click occurs.
#[derive(Clone, Debug)]
pub struct NoJumpResult {
    pub times: Vec<f64>,
    /// Normalized expectations.
    pub expectations: Vec<(String, Vec<Complex64>)>,
    /// Probability of no click up to each grid time.
    pub survival: Vec<f64>,
    pub final_state: QuantumState,
}

impl NoJumpResult {
    pub fn series(&self, label: &str) -> Option<&[Complex64]> {
        self.expectations.iter().find(|(l, _)| l == label).map(|(_, v)| v.as_slice())
    }
}

pub fn no_jump_evolve(
    model: &LindbladModel,
    channels: &[DetectionChannel],
    initial: &QuantumState,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    tol: &Tolerances,
) -> Result<NoJumpResult> {
    if initial.space() != model.space() || observables.iter().any(|(_, o)| o.space() != model.space()) {
        return Err(CatError::SpaceMismatch);
    }
    check_grid(t_grid)?;
    let unravel = branches(model, channels, false)?;
    let layout = Layout { dim: model.space().dim(), ket: false };
    let mut gen = Generator::new(model, &recycle_weights(model, channels, false), unravel.dark_total);
    let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| gen.rhs_density(t, y, dy);
    let mut y0 = initial.density();
    let n0 = layout.norm(&y0);
    y0.iter_mut().for_each(|v| *v /= n0);
    let mut stepper = Stepper::new(t_grid[0], y0, *tol);
    let mut expectations: Vec<(String, Vec<Complex64>)> = observables.iter().map(|(l, _)| (l.clone(), Vec::new())).collect();
    let mut survival = vec![1.0];
    let mut log_survival = 0.0;
    for ((_, s), (_, op)) in expectations.iter_mut().zip(observables) {
        s.push(layout.expect(op, &stepper.y, 1.0));
    }
    for (t, is_grid) in stop_times(t_grid, &model.breakpoints()).into_iter().skip(1) {
        stepper.advance_to(&mut f, t)?;
        let mut y = std::mem::take(&mut stepper.y);
        let nrm = layout.norm(&y);
        if !(nrm > 0.0) {
            return Err(CatError::Integration { t, reason: "no-click probability vanished".into() });
        }
        if is_grid {
            for ((_, s), (_, op)) in expectations.iter_mut().zip(observables) {
                s.push(layout.expect(op, &y, nrm));
            }
        }
        log_survival += nrm.ln();
        if is_grid {
            survival.push(log_survival.exp());
        }
        y.iter_mut().for_each(|v| *v /= nrm);
        stepper.reset(t, y);
    }
    let final_state = layout.state(model, std::mem::take(&mut stepper.y))?;
    Ok(NoJumpResult { times: t_grid.to_vec(), expectations, survival, final_state })
}

/// Probability of at least one click during `[0, gate_time]`.
pub fn jump_probability(model: &LindbladModel, channels: &[DetectionChannel], initial: &QuantumState, gate_time: f64, tol: &Tolerances) -> Result<f64> {
    let r = no_jump_evolve(model, channels, initial, &[0.0, gate_time], &[], tol)?;
    Ok((1.0 - r.survival.last().copied().unwrap_or(1.0)).clamp(0.0, 1.0))
}

#[derive(Clone, Debug)]
pub struct TrajectorySummary {
    pub index: u64,
    pub jumps: Vec<JumpRecord>,
    pub hidden_jumps: usize,
    pub final_expectations: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub master_seed: u64,
    pub times: Vec<f64>,
    pub trajectories: Vec<TrajectorySummary>,
    /// Observable label, mean and standard error of the real part.
    pub mean: Vec<(String, Vec<Complex64>, Vec<f64>)>,
}

impl TrajectoryEnsemble {
    /// Runs `n_traj` trajectories in parallel. Trajectory `k` draws from
    /// stream `k` of a generator seeded with `master_seed`, and the merge
    /// walks trajectories in index order, so results do not depend on
    /// scheduling.
    pub fn run(
        model: &LindbladModel,
        channels: &[DetectionChannel],
        initial: &QuantumState,
        t_grid: &[f64],
        observables: &[(String, Operator)],
        n_traj: usize,
        master_seed: u64,
        opts: &TrajectoryOptions,
    ) -> Result<Self> {
        if n_traj == 0 {
            return Err(CatError::InvalidParameter("ensemble needs at least one trajectory".into()));
        }
        let runs: Vec<Result<Trajectory>> = (0..n_traj as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
                rng.set_stream(k);
                sme_evolve(model, channels, initial, t_grid, observables, &mut rng, opts)
            })
            .collect();
        let nt = t_grid.len();
        let mut sums: Vec<(Vec<Complex64>, Vec<f64>)> = observables.iter().map(|_| (vec![ZERO; nt], vec![0.0; nt])).collect();
        let mut trajectories = Vec::with_capacity(n_traj);
        for (k, r) in runs.into_iter().enumerate() {
            let tr = r?;
            for ((sum, sq), (_, series)) in sums.iter_mut().zip(&tr.expectations) {
                for (i, v) in series.iter().enumerate() {
                    sum[i] += v;
                    sq[i] += v.re * v.re;
                }
            }
            trajectories.push(TrajectorySummary {
                index: k as u64,
                final_expectations: tr.expectations.iter().map(|(_, s)| *s.last().unwrap()).collect(),
                jumps: tr.jumps,
                hidden_jumps: tr.hidden_jumps,
            });
        }
        let n = n_traj as f64;
        let mean = observables
            .iter()
            .zip(sums)
            .map(|((label, _), (sum, sq))| {
                let m: Vec<Complex64> = sum.iter().map(|s| s / n).collect();
                let se = m
                    .iter()
                    .zip(&sq)
                    .map(|(mu, q)| if n_traj > 1 { ((q / n - mu.re * mu.re).max(0.0) * n / (n - 1.0) / n).sqrt() } else { 0.0 })
                    .collect();
                (label.clone(), m, se)
            })
            .collect();
        Ok(Self { master_seed, times: t_grid.to_vec(), trajectories, mean })
    }

    pub fn mean_of(&self, label: &str) -> Option<(&[Complex64], &[f64])> {
        self.mean.iter().find(|(l, _, _)| l == label).map(|(_, m, s)| (m.as_slice(), s.as_slice()))
    }

    /// Mean number of recorded clicks and its standard error.
    pub fn mean_jump_count(&self) -> (f64, f64) {
        let n = self.trajectories.len() as f64;
        let counts: Vec<f64> = self.trajectories.iter().map(|t| t.jumps.len() as f64).collect();
        let m = counts.iter().sum::<f64>() / n;
        let var = if n > 1.0 { counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        (m, (var / n).sqrt())
    }
}

/// Inputs for the best Z-rotation correction after a single click.
#[derive(Clone, Debug)]
pub struct FeedbackAngleProblem {
    /// Driven gate model.
    pub model: LindbladModel,
    /// Monitored channel; its efficiency is taken as one.
    pub channel: DetectionChannel,
    pub initial: QuantumState,
    pub gate_time: f64,
    /// Drive-off settling after the gate, under the same no-click flow.
    pub settle_time: f64,
    pub cat_label: String,
    pub code: CatCode,
    /// Ideal output in the logical {|0⟩, |1⟩} basis.
    pub target: [Complex64; 2],
    pub tol: Tolerances,
}

#[derive(Clone, Copy, Debug)]
pub struct FeedbackAngle {
    /// Rotation angle in [0, 2π).
    pub angle: f64,
    /// Offset from π, wrapped to (−π, π].
    pub delta: f64,
    pub fidelity: f64,
    /// ⟨L†L⟩ of the monitored channel at the click.
    pub population: f64,
}

/// Codespace block in the logical {|0⟩, |1⟩} basis.
pub fn logical_block(code: &CatCode, rho: &nalgebra::DMatrix<Complex64>) -> Matrix2<Complex64> {
    let p = code.project(rho);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = Matrix2::new(Complex64::new(s, 0.0), Complex64::new(s, 0.0), Complex64::new(s, 0.0), Complex64::new(-s, 0.0));
    w.adjoint() * p * w
}

/// ⟨ψ|R ρ R†|ψ⟩ with R = diag(e^{−iφ/2}, e^{iφ/2}).
pub fn rotated_fidelity(block: &Matrix2<Complex64>, target: &[Complex64; 2], phi: f64) -> f64 {
    let r = [Complex64::from_polar(1.0, -0.5 * phi), Complex64::from_polar(1.0, 0.5 * phi)];
    let mut s = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            s += target[i].conj() * r[i] * block[(i, j)] * r[j].conj() * target[j];
        }
    }
    s.re
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Best logical Z correction after a click at `t_jump`, found on the
/// settled codespace block.
pub fn optimal_feedback_angle(problem: &FeedbackAngleProblem, t_jump: f64) -> Result<FeedbackAngle> {
    if !(t_jump > 0.0 && t_jump < problem.gate_time) {
        return Err(CatError::InvalidParameter(format!("jump time {t_jump} outside the gate window")));
    }
    let channel = DetectionChannel { efficiency: 1.0, dark_count_rate: 0.0, feedback: None, ..problem.channel.clone() };
    let channels = std::slice::from_ref(&channel);
    let (idx, _) = channel.resolve(&problem.model)?;
    let before = no_jump_evolve(&problem.model, channels, &problem.initial, &[0.0, t_jump], &[], &problem.tol)?;
    let l = problem.model.dissipators[idx].operator_at(t_jump);
    let layout = Layout { dim: problem.model.space().dim(), ket: false };
    let mut y = before.final_state.density();
    let mut s1 = vec![ZERO; y.len()];
    let mut s2 = vec![ZERO; y.len()];
    let population = layout.weight(&l, &y, &mut s1);
    if !(population >= MIN_JUMP_POPULATION) {
        return Err(CatError::Rejected(format!("population {population:.2e} at t = {t_jump} too small for a click")));
    }
    layout.apply(&l, &mut y, &mut s1, &mut s2);
    let jumped = QuantumState::from_density(problem.model.space(), y)?;
    let after = no_jump_evolve(&problem.model, channels, &jumped, &[t_jump, problem.gate_time], &[], &problem.tol)?;
    let settled = if problem.settle_time > 0.0 {
        let idle = problem.model.undriven();
        let chan: Vec<DetectionChannel> = if idle.dissipator(&channel.dissipator).is_some() { vec![channel.clone()] } else { Vec::new() };
        let grid = [problem.gate_time, problem.gate_time + problem.settle_time];
        no_jump_evolve(&idle, &chan, &after.final_state, &grid, &[], &problem.tol)?.final_state
    } else {
        after.final_state
    };
    let block = logical_block(&problem.code, &settled.reduced(&problem.cat_label)?);
    let fid = |phi: f64| rotated_fidelity(&block, &problem.target, phi);
    let tau = std::f64::consts::TAU;
    let coarse = 32;
    let best = (0..coarse).map(|k| tau * k as f64 / coarse as f64).max_by(|a, b| fid(*a).partial_cmp(&fid(*b)).unwrap()).unwrap();
    let step = tau / coarse as f64;
    let angle = golden_max(fid, best - step, best + step, 1e-4).rem_euclid(tau);
    let mut delta = angle - std::f64::consts::PI;
    if delta <= -std::f64::consts::PI {
        delta += tau;
    }
    Ok(FeedbackAngle { angle, delta, fidelity: fid(angle), population })
}

/// Convenience: ensemble average through the equivalent Lindblad model.
pub fn averaged_evolve(
    model: &LindbladModel,
    channels: &[DetectionChannel],
    initial: &QuantumState,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    opts: &EvolveOptions,
) -> Result<crate::dynamics::EvolutionResult> {
    evolve(&feedback_averaged_model(model, channels)?, initial, t_grid, observables, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::HilbertSpace;

    #[test]
    fn rejects_bad_efficiency() {
        assert!(DetectionChannel::new("b", 1.5).is_err());
        assert!(DetectionChannel::new("b", -0.1).is_err());
    }

    #[test]
    fn golden_finds_peak() {
        let x = golden_max(|x| -(x - 1.3).powi(2), 0.0, 3.0, 1e-8);
        assert!((x - 1.3).abs() < 1e-6);
    }

    #[test]
    fn decay_survival_matches_exponential() {
        let s = HilbertSpace::bosonic(&[("b", 3)]).unwrap();
        let mut m = LindbladModel::new(&s);
        m.add_dissipator("b", 2.0, Operator::a(&s, "b").unwrap()).unwrap();
        let ch = DetectionChannel::new("b", 0.5).unwrap();
        let init = QuantumState::basis(&s, &[1]).unwrap();
        let p = jump_probability(&m, &[ch], &init, 1.0, &Tolerances::default()).unwrap();
        // P(no click) = 1 − η(1 − e^{−κt})
        let expect = 0.5 * (1.0 - (-2.0f64).exp());
        assert!((p - expect).abs() < 1e-7, "{p} vs {expect}");
    }
}
