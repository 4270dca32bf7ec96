//! Hardware noise on top of the gate models, thermal buffer analytics,
//! the joint phase-conjugation symmetry check and the adiabatically
//! eliminated correlated dissipator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficient::TimeCoefficient;
use crate::dynamics::{evolve, linspace, EvolveOptions};
use crate::error::{CatError, Result};
use crate::gates::{build, Design, GateModel, GateSpec};
use crate::metrics::{exponential_fit, LinearFit};
use crate::model::LindbladModel;
use crate::ode::Tolerances;
use crate::operator::{FockOp, Operator};
use crate::space::{HilbertSpace, Mode, ModeKind, SpaceRef};
use crate::state::{Logical, QuantumState};
use crate::stochastic::{DetectionChannel, TrajectoryEnsemble, TrajectoryOptions, Unraveling};

/// Noise rates in units of g₂. Zero fields add nothing to a model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    pub kappa_a: f64,
    pub n_th_a: f64,
    pub kappa_phi_a: f64,
    #[serde(rename = "K_a")]
    pub k_a: f64,
    #[serde(rename = "K_b")]
    pub k_b: f64,
    pub chi_ab: f64,
    pub n_th_b: f64,
    pub n_th_r: f64,
    pub dark_count_rate: f64,
}

impl NoiseParams {
    /// g₂/2π = 1 MHz device: κ_a/2π = 53 Hz, K_a/2π = 1 kHz, K_b/2π = 810 kHz,
    /// χ_ab/2π = 65 kHz, κ_φ/2π = 10 Hz and 10% thermal occupation.
    pub fn reference() -> Self {
        Self {
            kappa_a: 5.3e-5,
            n_th_a: 0.1,
            kappa_phi_a: 1e-5,
            k_a: 1e-3,
            k_b: 0.81,
            chi_ab: 0.065,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kappa_a", self.kappa_a),
            ("n_th_a", self.n_th_a),
            ("kappa_phi_a", self.kappa_phi_a),
            ("K_a", self.k_a),
            ("K_b", self.k_b),
            ("chi_ab", self.chi_ab),
            ("n_th_b", self.n_th_b),
            ("n_th_r", self.n_th_r),
            ("dark_count_rate", self.dark_count_rate),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CatError::InvalidParameter(format!("noise parameter {name} must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

/// Adds Kerr, cross-Kerr, loss, heating and dephasing to every cat mode in
/// `cats`. Cross-Kerr couples the first cat mode to `buffer`.
pub fn apply_noise(model: &LindbladModel, params: &NoiseParams, cats: &[&str], buffer: Option<&str>) -> Result<LindbladModel> {
    params.validate()?;
    let space = model.space().clone();
    let mut out = model.clone();
    for &cat in cats {
        let a = Operator::a(&space, cat)?;
        if params.k_a > 0.0 {
            let ad2a2 = a.dag().mul(&a.dag())?.mul(&a)?.mul(&a)?.with_hermitian_hint(true);
            out.add_hamiltonian(&format!("kerr_{cat}"), ad2a2, TimeCoefficient::constant(-params.k_a))?;
        }
        if params.kappa_a > 0.0 {
            out.add_dissipator(&format!("loss_{cat}"), params.kappa_a * (1.0 + params.n_th_a), a.clone())?;
            if params.n_th_a > 0.0 {
                out.add_dissipator(&format!("heat_{cat}"), params.kappa_a * params.n_th_a, a.dag())?;
            }
        }
        if params.kappa_phi_a > 0.0 {
            out.add_dissipator(&format!("dephasing_{cat}"), params.kappa_phi_a, Operator::n(&space, cat)?)?;
        }
    }
    if params.chi_ab > 0.0 || params.k_b > 0.0 {
        let b = buffer.ok_or_else(|| CatError::InvalidParameter("buffer Kerr terms need a buffer mode".into()))?;
        let bop = Operator::a(&space, b)?;
        if params.chi_ab > 0.0 {
            let cat = cats.first().ok_or_else(|| CatError::InvalidParameter("cross-Kerr needs a cat mode".into()))?;
            let nn = Operator::n(&space, cat)?.mul(&Operator::n(&space, b)?)?.with_hermitian_hint(true);
            out.add_hamiltonian("cross_kerr", nn, TimeCoefficient::constant(params.chi_ab))?;
        }
        if params.k_b > 0.0 {
            let bd2b2 = bop.dag().mul(&bop.dag())?.mul(&bop)?.mul(&bop)?.with_hermitian_hint(true);
            out.add_hamiltonian(&format!("kerr_{b}"), bd2b2, TimeCoefficient::constant(-params.k_b))?;
        }
    }
    if params.n_th_b > 0.0 {
        let b = buffer.ok_or_else(|| CatError::InvalidParameter("buffer heating needs a buffer mode".into()))?;
        let kb = out.dissipator(b).map(|d| d.rate).ok_or_else(|| CatError::InvalidParameter(format!("no loss channel `{b}` to heat")))?;
        // the loss channel itself grows by (1 + n)
        for d in out.dissipators.iter_mut().filter(|d| d.label == b) {
            d.rate *= 1.0 + params.n_th_b;
        }
        out.add_dissipator(&format!("heat_{b}"), kb * params.n_th_b, Operator::a(&space, b)?.dag())?;
    }
    if params.n_th_r > 0.0 {
        let b = buffer.ok_or_else(|| CatError::InvalidParameter("reservoir heating needs a buffer mode".into()))?;
        let cat = cats.first().ok_or_else(|| CatError::InvalidParameter("reservoir heating needs a cat mode".into()))?;
        let kab = out.dissipator("ab").map(|d| d.rate).ok_or_else(|| CatError::InvalidParameter("reservoir heating needs a correlated `ab` channel".into()))?;
        for d in out.dissipators.iter_mut().filter(|d| d.label == "ab") {
            d.rate *= 1.0 + params.n_th_r;
        }
        let ab = Operator::a(&space, cat)?.mul(&Operator::a(&space, b)?)?;
        out.add_dissipator("heat_ab", kab * params.n_th_r, ab.dag())?;
    }
    Ok(out)
}

/// Noisy copy of a gate model. Dark counts go to every detection channel.
pub fn apply_noise_to_gate(gate: &GateModel, params: &NoiseParams) -> Result<GateModel> {
    let mut cats = vec![gate.cat.as_str()];
    if let Some(t) = &gate.target {
        cats.push(t.as_str());
    }
    let mut out = gate.clone();
    out.model = apply_noise(&gate.model, params, &cats, gate.buffer.as_deref())?;
    if params.dark_count_rate > 0.0 {
        out.channels = gate
            .channels
            .iter()
            .cloned()
            .map(|c| c.with_dark_counts(params.dark_count_rate))
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

/// Idle parity decay rate with a thermal buffer and Z(π) photodetection
/// feedback: 2ηκ_b n(1 + n).
pub fn thermal_buffer_decay(eta: f64, kappa_b: f64, n_th_b: f64) -> f64 {
    2.0 * eta * kappa_b * n_th_b * (1.0 + n_th_b)
}

/// Empirical idle decay rate with a thermal reservoir behind D[ab]:
/// 2√(g₂κ_ab) n_r.
pub fn autonomous_thermal_decay(g2: f64, kappa_ab: f64, n_th_r: f64) -> f64 {
    2.0 * (g2 * kappa_ab).sqrt() * n_th_r
}

/// Idle cat plus thermal buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalSetup {
    pub alpha: f64,
    /// κ_b for photodetection, κ_ab for the correlated dissipator.
    pub kappa: f64,
    pub n_th: f64,
    pub eta: f64,
    pub dims: (usize, usize),
    pub duration: f64,
    pub n_points: usize,
    /// Fit only times after this transient.
    pub fit_start: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalDecay {
    pub times: Vec<f64>,
    pub parity: Vec<f64>,
    pub gamma: f64,
    pub predicted: f64,
    pub fit: LinearFit,
}

impl ThermalDecay {
    pub fn relative_error(&self) -> f64 {
        (self.gamma - self.predicted).abs() / self.predicted.abs().max(f64::MIN_POSITIVE)
    }
}

fn idle_space(setup: &ThermalSetup) -> Result<SpaceRef> {
    let mode = |l: &str, d| Mode { label: l.to_string(), dim: d, kind: ModeKind::Bosonic };
    HilbertSpace::new(vec![mode("a", setup.dims.0), mode("b", setup.dims.1)])
}

fn idle_hamiltonian(model: &mut LindbladModel, alpha: f64) -> Result<()> {
    let space = model.space().clone();
    let a = Operator::a(&space, "a")?;
    let b = Operator::a(&space, "b")?;
    let t = a.mul(&a)?.mul(&b.dag())?;
    model.add_hamiltonian("exchange", t.add(&t.dag())?.with_hermitian_hint(true), TimeCoefficient::one())?;
    model.add_hamiltonian("pump", Operator::fock(&space, "b", FockOp::X)?, TimeCoefficient::constant(-alpha * alpha))?;
    Ok(())
}

fn idle_initial(space: &SpaceRef, alpha: f64) -> Result<QuantumState> {
    let da = space.mode("a")?.dim;
    let db = space.mode("b")?.dim;
    let cat = crate::state::cat_amplitudes(da, Complex64::new(alpha, 0.0), 1)?;
    let mut vac = vec![Complex64::new(0.0, 0.0); db];
    vac[0] = Complex64::new(1.0, 0.0);
    QuantumState::product(space, &[("a", cat), ("b", vac)])
}

fn fit_decay(times: Vec<f64>, parity: Vec<f64>, fit_start: f64, predicted: f64) -> Result<ThermalDecay> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = times.iter().zip(&parity).filter(|(t, _)| **t >= fit_start).map(|(t, p)| (*t, *p)).unzip();
    let fit = exponential_fit(&xs, &ys)?;
    Ok(ThermalDecay { times, parity, gamma: -fit.slope, predicted, fit })
}

/// Photodetection with Z(π) feedback on an idle |C+⟩ and a thermal buffer
/// bath, averaged over `n_traj` pure-state trajectories. Heating photons
/// are unmonitored.
pub fn simulate_thermal_photodetection(setup: &ThermalSetup, n_traj: usize, seed: u64, tol: Tolerances) -> Result<ThermalDecay> {
    let space = idle_space(setup)?;
    let mut model = LindbladModel::new(&space);
    idle_hamiltonian(&mut model, setup.alpha)?;
    let b = Operator::a(&space, "b")?;
    model.add_dissipator("b", setup.kappa * (1.0 + setup.n_th), b.clone())?;
    model.add_dissipator("heat_b", setup.kappa * setup.n_th, b.dag())?;
    let channel = DetectionChannel::new("b", setup.eta)?.with_feedback(Operator::sign_x(&space, "a")?)?;
    let initial = idle_initial(&space, setup.alpha)?;
    let grid = linspace(0.0, setup.duration, setup.n_points);
    let obs = vec![("parity".to_string(), Operator::parity(&space, "a")?)];
    let opts = TrajectoryOptions { tol, unraveling: Unraveling::Ket };
    let ens = TrajectoryEnsemble::run(&model, &[channel], &initial, &grid, &obs, n_traj, seed, &opts)?;
    let parity: Vec<f64> = ens.mean_of("parity").expect("parity recorded").0.iter().map(|c| c.re).collect();
    fit_decay(grid, parity, setup.fit_start, thermal_buffer_decay(setup.eta, setup.kappa, setup.n_th))
}

/// Idle |C+⟩ under H_AB + κ_ab(1+n)D[ab] + κ_ab n D[a†b†].
pub fn simulate_thermal_autonomous(setup: &ThermalSetup, tol: Tolerances) -> Result<ThermalDecay> {
    let space = idle_space(setup)?;
    let mut model = LindbladModel::new(&space);
    idle_hamiltonian(&mut model, setup.alpha)?;
    let ab = Operator::a(&space, "a")?.mul(&Operator::a(&space, "b")?)?;
    model.add_dissipator("ab", setup.kappa * (1.0 + setup.n_th), ab.clone())?;
    model.add_dissipator("heat_ab", setup.kappa * setup.n_th, ab.dag())?;
    let initial = idle_initial(&space, setup.alpha)?;
    let grid = linspace(0.0, setup.duration, setup.n_points);
    let obs = vec![("parity".to_string(), Operator::parity(&space, "a")?)];
    let res = evolve(&model, &initial, &grid, &obs, &EvolveOptions { tol, leakage: None })?;
    let parity = res.real_series("parity").expect("parity recorded");
    fit_decay(grid, parity, setup.fit_start, autonomous_thermal_decay(1.0, setup.kappa, setup.n_th))
}

/// Result of comparing C∘L with L∘C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    /// Frobenius norm of C∘L − L∘C over the unit-matrix basis.
    pub commutator_norm: f64,
    pub per_term: Vec<(String, f64)>,
    /// max |C(C(ρ)) − ρ| over a probe set.
    pub involution_defect: f64,
    /// Labels of terms with no invariance guarantee.
    pub uncovered: Vec<String>,
}

impl ConjugationReport {
    pub fn guaranteed(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Largest per-mode dimension accepted by [`phase_conjugation_check`].
pub const MAX_CONJUGATION_DIM: usize = 12;

/// Joint x-axis phase conjugation C|x⟩⟨x′| = |−x′⟩⟨−x| on every mode.
///
/// Fock wavefunctions are real in x, so the x-basis transpose is the Fock
/// transpose and the sign flip is the photon-number parity.
pub fn conjugate(space: &SpaceRef, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let p = parity_signs(space);
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| rho[(j, i)] * (p[i] * p[j]))
}

fn parity_signs(space: &SpaceRef) -> Vec<f64> {
    (0..space.dim()).map(|k| if space.unflatten(k).iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Dense Liouvillian piece L(ρ) = Gρ + ρG† + Σ J ρ J†.
struct Piece {
    g: DMatrix<Complex64>,
    jumps: Vec<DMatrix<Complex64>>,
}

impl Piece {
    /// L(E_ij), E_ij = |i⟩⟨j|.
    fn on_unit(&self, i: usize, j: usize, out: &mut DMatrix<Complex64>) {
        let d = out.nrows();
        out.fill(Complex64::new(0.0, 0.0));
        for k in 0..d {
            out[(k, j)] += self.g[(k, i)];
            out[(i, k)] += self.g[(k, j)].conj();
        }
        for l in &self.jumps {
            for k in 0..d {
                let lk = l[(k, i)];
                if lk == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for m in 0..d {
                    out[(k, m)] += lk * l[(m, j)].conj();
                }
            }
        }
    }

    fn commutator_norm(&self, p: &[f64]) -> f64 {
        let d = p.len();
        let mut lij = DMatrix::zeros(d, d);
        let mut lji = DMatrix::zeros(d, d);
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                self.on_unit(i, j, &mut lij);
                self.on_unit(j, i, &mut lji);
                // C(L(E_ij)) − L(C(E_ij)), with C(E_ij) = p_i p_j E_ji
                for k in 0..d {
                    for m in 0..d {
                        let lhs = lij[(m, k)] * (p[k] * p[m]);
                        let rhs = lji[(k, m)] * (p[i] * p[j]);
                        total += (lhs - rhs).norm_sqr();
                    }
                }
            }
        }
        total.sqrt()
    }
}

fn same_operator(a: &Operator, b: &Operator) -> bool {
    a.matrix().add_scaled(b.matrix(), Complex64::new(-1.0, 0.0)).max_abs() < 1e-12 * b.matrix().max_abs().max(1.0)
}

/// Terms of the kind the symmetry argument covers: x-quadrature drives,
/// the two-photon exchange and single-photon loss.
fn covered_hamiltonian(space: &SpaceRef, op: &Operator) -> Result<bool> {
    let labels: Vec<String> = space.modes().iter().map(|m| m.label.clone()).collect();
    for l in &labels {
        if same_operator(op, &Operator::fock(space, l, FockOp::X)?) {
            return Ok(true);
        }
    }
    for a in &labels {
        for b in &labels {
            if a == b {
                continue;
            }
            let am = Operator::a(space, a)?;
            let t = am.mul(&am)?.mul(&Operator::a(space, b)?.dag())?;
            if same_operator(op, &t.add(&t.dag())?) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Measures ‖C∘L(t) − L(t)∘C‖ for the model at time `t`, in total and per
/// term. Terms outside the covered set are still included and listed in
/// [`ConjugationReport::uncovered`].
pub fn phase_conjugation_check(model: &LindbladModel, t: f64) -> Result<ConjugationReport> {
    let space = model.space().clone();
    for m in space.modes() {
        if m.kind != ModeKind::Bosonic {
            return Err(CatError::InvalidParameter(format!("phase conjugation is defined for bosonic modes only, `{}` is not", m.label)));
        }
        if m.dim > MAX_CONJUGATION_DIM {
            return Err(CatError::InvalidDimension { label: m.label.clone(), dim: m.dim, reason: "conjugation check is limited to 12 levels per mode" });
        }
    }
    let d = space.dim();
    let mi = Complex64::new(0.0, -1.0);
    let mut pieces: Vec<(String, Piece)> = Vec::new();
    let mut uncovered = Vec::new();
    for h in &model.hamiltonian {
        let m = h.op.to_dense() * (h.coeff.eval(t) * mi);
        pieces.push((h.label.clone(), Piece { g: m, jumps: Vec::new() }));
        if !covered_hamiltonian(&space, &h.op)? {
            uncovered.push(h.label.clone());
        }
    }
    for diss in &model.dissipators {
        let l = diss.operator_at(t).to_dense() * Complex64::new(diss.rate.sqrt(), 0.0);
        let g = l.adjoint() * &l * Complex64::new(-0.5, 0.0);
        let op = Operator::from_csr(&space, diss.operator_at(t))?;
        let single_loss = space.modes().iter().any(|m| Operator::a(&space, &m.label).map(|a| same_operator(&op, &a)).unwrap_or(false));
        if !single_loss {
            uncovered.push(diss.label.clone());
        }
        pieces.push((diss.label.clone(), Piece { g, jumps: vec![l] }));
    }
    let p = parity_signs(&space);
    let per_term: Vec<(String, f64)> = pieces.iter().map(|(l, pc)| (l.clone(), pc.commutator_norm(&p))).collect();
    let total = Piece {
        g: pieces.iter().fold(DMatrix::zeros(d, d), |acc, (_, pc)| acc + &pc.g),
        jumps: pieces.iter().flat_map(|(_, pc)| pc.jumps.iter().cloned()).collect(),
    };
    let commutator_norm = total.commutator_norm(&p);

    let probe = DMatrix::from_fn(d, d, |i, j| Complex64::new(((i * 31 + j * 17) % 13) as f64 - 6.0, ((i * 7 + j * 23) % 11) as f64 - 5.0));
    let involution_defect = (conjugate(&space, &conjugate(&space, &probe)) - &probe).camax();
    Ok(ConjugationReport { commutator_norm, per_term, involution_defect, uncovered })
}

/// Buffer elimination parameters for a two-photon-exchange coupler:
/// κ_ab = 4g_ab²/κ_r.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticEliminationParams {
    pub g_ab: f64,
    pub kappa_r: f64,
}

impl AdiabaticEliminationParams {
    pub fn kappa_ab(&self) -> f64 {
        4.0 * self.g_ab * self.g_ab / self.kappa_r
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.kappa_r < 10.0 * self.g_ab {
            w.push(format!("κ_r/g_ab = {:.3} is below 10; elimination is unreliable", self.kappa_r / self.g_ab));
        }
        w
    }
}

/// Semi-classical two-photon rate of the eliminated correlated dissipator.
pub fn effective_kappa_2(alpha: f64, g2: f64, kappa_ab: f64) -> f64 {
    4.0 * g2 * g2 / (alpha * alpha * kappa_ab)
}

/// L_eff = (2ig₂/√κ_ab) a (a†a)⁺ (a² − α²), with the number pseudo-inverse
/// vanishing on vacuum. Also returns validity warnings.
pub fn adiabatic_elimination_effective(space: &SpaceRef, label: &str, alpha: f64, g2: f64, kappa_ab: f64) -> Result<(Operator, Vec<String>)> {
    if !(kappa_ab > 0.0) || !(g2 > 0.0) {
        return Err(CatError::InvalidParameter("elimination needs g₂ > 0 and κ_ab > 0".into()));
    }
    let mut warnings = Vec::new();
    let ratio = kappa_ab * alpha * alpha / g2;
    if ratio < 4.0 {
        warnings.push(format!("κ_ab|α|²/g₂ = {ratio:.3} is below 4; elimination is unreliable"));
    }
    let a = Operator::a(space, label)?;
    let inv = Operator::number_function(space, label, |n| if n == 0 { 0.0 } else { 1.0 / n as f64 })?;
    let stab = a.mul(&a)?.add_identity(Complex64::new(-alpha * alpha, 0.0));
    let l = a.mul(&inv)?.mul(&stab)?.scale(Complex64::new(0.0, 2.0 * g2 / kappa_ab.sqrt()));
    Ok((l, warnings))
}

/// Parity of the full two-mode autonomous gate next to the single-mode
/// model with D[L_eff] and the same drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionComparison {
    pub times: Vec<f64>,
    pub parity_full: Vec<f64>,
    pub parity_reduced: Vec<f64>,
    pub max_deviation: f64,
    pub warnings: Vec<String>,
}

/// Single-mode counterpart of an autonomous-feedback Z gate.
pub fn reduced_autonomous_model(spec: &GateSpec) -> Result<(LindbladModel, Vec<String>)> {
    if spec.design != Design::AutonomousFeedback {
        return Err(CatError::InvalidParameter("reduction applies to the autonomous feedback design".into()));
    }
    spec.validate()?;
    let da = spec.dim("a", spec.default_cat_dim());
    let space = HilbertSpace::bosonic(&[("a", da)])?;
    let kab = spec.rates.kappa_ab.unwrap_or(0.0);
    let (l, warnings) = adiabatic_elimination_effective(&space, "a", spec.alpha, spec.g2(), kab)?;
    let mut model = LindbladModel::new(&space);
    model.add_dissipator("ab_eff", 1.0, l)?;
    let coeff = spec.drive_coefficient(spec.theta / (4.0 * spec.alpha));
    model.add_drive("zeno", Operator::fock(&space, "a", FockOp::X)?, coeff)?;
    Ok((model, warnings))
}

/// Runs both models from |+_L⟩ over the gate and compares ⟨Π_a⟩.
pub fn compare_adiabatic_elimination(spec: &GateSpec, n_points: usize, tol: Tolerances) -> Result<ReductionComparison> {
    let gate = build(spec)?;
    let (reduced, warnings) = reduced_autonomous_model(spec)?;
    let times = linspace(0.0, spec.gate_time, n_points);
    let full_obs = vec![("parity".to_string(), gate.parity()?)];
    let full = evolve(&gate.model, &gate.initial(Logical::Plus)?, &times, &full_obs, &EvolveOptions { tol, leakage: None })?;
    let rs = reduced.space().clone();
    let red_init = QuantumState::logical(&rs, "a", Complex64::new(spec.alpha, 0.0), Logical::Plus)?;
    let red_obs = vec![("parity".to_string(), Operator::parity(&rs, "a")?)];
    let red = evolve(&reduced, &red_init, &times, &red_obs, &EvolveOptions { tol, leakage: None })?;
    let parity_full = full.real_series("parity").expect("parity recorded");
    let parity_reduced = red.real_series("parity").expect("parity recorded");
    let max_deviation = parity_full.iter().zip(&parity_reduced).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ReductionComparison { times, parity_full, parity_reduced, max_deviation, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_identity() {
        let s = HilbertSpace::bosonic(&[("a", 5)]).unwrap();
        let m = LindbladModel::new(&s);
        let out = apply_noise(&m, &NoiseParams::default(), &["a"], None).unwrap();
        assert!(out.hamiltonian.is_empty() && out.dissipators.is_empty());
    }

    #[test]
    fn cross_kerr_needs_buffer() {
        let s = HilbertSpace::bosonic(&[("a", 5)]).unwrap();
        let m = LindbladModel::new(&s);
        assert!(apply_noise(&m, &NoiseParams::reference(), &["a"], None).is_err());
    }

    #[test]
    fn thermal_rate_values() {
        assert_eq!(thermal_buffer_decay(1.0, 8.0, 0.0), 0.0);
        assert!((thermal_buffer_decay(1.0, 8.0, 0.02) - 0.3264).abs() < 1e-12);
    }

    #[test]
    fn conjugation_is_involution() {
        let s = HilbertSpace::bosonic(&[("a", 3), ("b", 2)]).unwrap();
        let r = DMatrix::from_fn(6, 6, |i, j| Complex64::new(i as f64, j as f64 * 0.5));
        assert_eq!(conjugate(&s, &conjugate(&s, &r)), r);
    }
}
