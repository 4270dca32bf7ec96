//! Factories turning a [`GateSpec`] into a Lindblad model plus detection
//! channels, and the discrete jump operators.
//!
//! Mode labels: `a` is the cat, `b` its buffer, `q` an ancilla; CNOT
//! designs use `c` and `t` for control and target.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficient::TimeCoefficient;
use crate::dynamics::{evolve, linspace, reconverge, EvolutionResult, EvolveOptions, Reconvergence, ReconvergeOptions};
use crate::error::{CatError, Result};
use crate::flat::{flat_hamiltonian_operator, solve_flat_drive, FlatDriveProblem, FlatDriveSolution};
use crate::model::LindbladModel;
use crate::ode::Tolerances;
use crate::operator::{AncillaOp, FockOp, Operator};
use crate::space::{HilbertSpace, Mode, ModeKind, SpaceRef};
use crate::state::{cat_amplitudes, CatCode, Logical, QuantumState};
use crate::stochastic::{feedback_averaged_model, optimal_feedback_angle, DetectionChannel, FeedbackAngle, FeedbackAngleProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    StandardZeno,
    Photodetection,
    AutonomousFeedback,
    FlatHamiltonian { order: usize },
    DiscreteQubit,
    DiscreteQutrit,
    XGate,
    CnotZeno,
    CnotFlat { order: usize },
    CnotAutonomous,
}

impl Design {
    pub fn name(&self) -> &'static str {
        match self {
            Design::StandardZeno => "standard_zeno",
            Design::Photodetection => "photodetection",
            Design::AutonomousFeedback => "autonomous_feedback",
            Design::FlatHamiltonian { .. } => "flat_hamiltonian",
            Design::DiscreteQubit => "discrete_qubit",
            Design::DiscreteQutrit => "discrete_qutrit",
            Design::XGate => "x_gate",
            Design::CnotZeno => "cnot_zeno",
            Design::CnotFlat { .. } => "cnot_flat",
            Design::CnotAutonomous => "cnot_autonomous",
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Design::CnotZeno | Design::CnotFlat { .. } | Design::CnotAutonomous)
    }

    fn order(&self) -> usize {
        match self {
            Design::FlatHamiltonian { order } | Design::CnotFlat { order } => *order,
            _ => 0,
        }
    }

    /// (required, optional) rate keys.
    fn rate_keys(&self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Design::StandardZeno | Design::Photodetection | Design::FlatHamiltonian { .. } | Design::CnotZeno | Design::CnotFlat { .. } => {
                (&["g2", "kappa_b"], &[])
            }
            Design::AutonomousFeedback | Design::CnotAutonomous => (&["g2", "kappa_ab"], &[]),
            Design::DiscreteQubit => (&["g2", "kappa_b", "kappa_Z"], &["kappa_q"]),
            Design::DiscreteQutrit => (&["g2", "kappa_b", "kappa_Z"], &["kappa_Z_prime", "kappa_q"]),
            Design::XGate => (&["g2", "kappa_b", "Delta"], &[]),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub g2: Option<f64>,
    pub kappa_b: Option<f64>,
    pub kappa_ab: Option<f64>,
    #[serde(rename = "kappa_Z")]
    pub kappa_z: Option<f64>,
    #[serde(rename = "kappa_Z_prime")]
    pub kappa_z_prime: Option<f64>,
    pub kappa_q: Option<f64>,
    #[serde(rename = "Delta")]
    pub delta: Option<f64>,
}

impl Rates {
    fn entries(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("g2", self.g2),
            ("kappa_b", self.kappa_b),
            ("kappa_ab", self.kappa_ab),
            ("kappa_Z", self.kappa_z),
            ("kappa_Z_prime", self.kappa_z_prime),
            ("kappa_q", self.kappa_q),
            ("Delta", self.delta),
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveProfile {
    #[default]
    Constant,
    Gaussian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnotVariant {
    #[default]
    DissipativeTarget,
    HamiltonianOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub design: Design,
    pub theta: f64,
    pub gate_time: f64,
    /// Real, positive cat amplitude.
    pub alpha: f64,
    #[serde(default)]
    pub rates: Rates,
    /// Detection efficiency, photodetection design only.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub drive_profile: DriveProfile,
    #[serde(default)]
    pub truncations: BTreeMap<String, usize>,
    #[serde(default)]
    pub n_p: Option<i64>,
    /// Replace buffer and `D[b]` by `κ₂ D[a² − α²]`, κ₂ = 4g₂²/κ_b.
    #[serde(default)]
    pub eliminated: bool,
    #[serde(default)]
    pub cnot_variant: CnotVariant,
}

impl GateSpec {
    pub fn new(design: Design, theta: f64, gate_time: f64, alpha: f64) -> Self {
        Self {
            design,
            theta,
            gate_time,
            alpha,
            rates: Rates::default(),
            eta: None,
            drive_profile: DriveProfile::Constant,
            truncations: BTreeMap::new(),
            n_p: None,
            eliminated: false,
            cnot_variant: CnotVariant::DissipativeTarget,
        }
    }

    pub fn with_rates(mut self, rates: Rates) -> Self {
        self.rates = rates;
        self
    }

    pub fn with_dim(mut self, label: &str, dim: usize) -> Self {
        self.truncations.insert(label.to_string(), dim);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn eliminated(mut self, on: bool) -> Self {
        self.eliminated = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CatError::InvalidParameter(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be real and positive, got {}", self.alpha));
        }
        if !(self.gate_time > 0.0 && self.gate_time.is_finite()) || !self.theta.is_finite() {
            return bad("gate_time must be positive and theta finite".into());
        }
        let d = self.design;
        let both_dampings = self.rates.kappa_b.is_some() && self.rates.kappa_ab.is_some();
        if matches!(d, Design::AutonomousFeedback | Design::CnotAutonomous) && both_dampings {
            return bad("both kappa_b and kappa_ab set: ambiguous buffer damping".into());
        }
        let (required, optional) = d.rate_keys();
        for (key, value) in self.rates.entries() {
            match value {
                Some(v) if !required.contains(&key) && !optional.contains(&key) => {
                    return bad(format!("rate `{key}` = {v} is not used by design {}", d.name()));
                }
                Some(v) if !(v >= 0.0 && v.is_finite()) => return bad(format!("rate `{key}` must be non-negative, got {v}")),
                None if required.contains(&key) => return bad(format!("design {} needs rate `{key}`", d.name())),
                _ => {}
            }
        }
        if self.rates.g2 == Some(0.0) {
            return bad("g2 must be positive".into());
        }
        match (d, self.eta) {
            (Design::Photodetection, None) => return bad("photodetection needs eta".into()),
            (Design::Photodetection, Some(e)) if !(0.0..=1.0).contains(&e) => return bad(format!("eta {e} outside [0, 1]")),
            (Design::Photodetection, _) => {}
            (_, Some(_)) => return bad(format!("eta is not used by design {}", d.name())),
            _ => {}
        }
        if self.eliminated && matches!(d, Design::Photodetection | Design::AutonomousFeedback | Design::CnotAutonomous) {
            return bad(format!("design {} needs the explicit buffer", d.name()));
        }
        if let Some(np) = self.n_p {
            if !d.is_cnot() {
                return bad(format!("n_p is not used by design {}", d.name()));
            }
            if np % 2 != 0 {
                return bad(format!("n_p must be even, got {np}"));
            }
            if (np as f64 - self.alpha * self.alpha).abs() > 2.0 {
                return bad(format!("n_p = {np} too far from |α|² = {}", self.alpha * self.alpha));
            }
        }
        if d == Design::XGate {
            let delta = self.rates.delta.unwrap_or(0.0);
            if delta != 0.0 && (self.gate_time - PI / delta).abs() > 1e-9 * self.gate_time {
                return bad(format!("x gate needs gate_time = π/Δ = {}", PI / delta));
            }
        }
        if d.order() > crate::flat::MAX_ORDER {
            return bad(format!("flat order {} above {}", d.order(), crate::flat::MAX_ORDER));
        }
        Ok(())
    }

    pub fn g2(&self) -> f64 {
        self.rates.g2.unwrap_or(1.0)
    }

    /// Effective two-photon loss rate of the eliminated model.
    pub fn kappa_2(&self) -> f64 {
        let g2 = self.g2();
        match (self.rates.kappa_b, self.rates.kappa_ab) {
            (Some(kb), _) => 4.0 * g2 * g2 / kb,
            (None, Some(kab)) => 4.0 * g2 * g2 / (self.alpha * self.alpha * kab),
            _ => 0.0,
        }
    }

    /// Even integer closest to |α|² unless set.
    pub fn n_p(&self) -> i64 {
        self.n_p.unwrap_or_else(|| 2 * ((self.alpha * self.alpha) / 2.0).round() as i64)
    }

    pub fn default_cat_dim(&self) -> usize {
        let a2 = self.alpha * self.alpha;
        ((4.0 * a2).ceil() as usize + 4 + 4 * self.design.order()).max(20)
    }

    pub fn dim(&self, label: &str, default: usize) -> usize {
        self.truncations.get(label).copied().unwrap_or(default)
    }

    /// Drive amplitude ε(t) with ∫ε dt = θ/(4α) over the gate window.
    pub fn drive_coefficient(&self, area: f64) -> TimeCoefficient {
        match self.drive_profile {
            DriveProfile::Constant => TimeCoefficient::window(area / self.gate_time, self.gate_time),
            DriveProfile::Gaussian => TimeCoefficient::gaussian_with_area(area, 0.0, self.gate_time),
        }
    }
}

/// Everything needed to simulate one gate.
#[derive(Clone, Debug)]
pub struct GateModel {
    pub spec: GateSpec,
    pub model: LindbladModel,
    pub channels: Vec<DetectionChannel>,
    /// Cat mode whose phase is rotated (the control for CNOT designs).
    pub cat: String,
    pub target: Option<String>,
    pub buffer: Option<String>,
    pub ancilla: Option<String>,
    pub code: CatCode,
    /// Logical rotation is Z(s·θ).
    pub rotation_sign: f64,
    pub flat: Option<FlatDriveSolution>,
    pub warnings: Vec<String>,
}

fn bosonic(label: &str, dim: usize) -> Mode {
    Mode { label: label.to_string(), dim, kind: ModeKind::Bosonic }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// g₂[(a² − α²)b† + h.c.] without the α² part, which callers add so it can
/// carry its own time dependence.
fn exchange(space: &SpaceRef, cat: &str, buffer: &str) -> Result<Operator> {
    let a = Operator::a(space, cat)?;
    let b = Operator::a(space, buffer)?;
    let t = a.mul(&a)?.mul(&b.dag())?;
    Ok(t.add(&t.dag())?.with_hermitian_hint(true))
}

fn two_photon(space: &SpaceRef, label: &str, alpha: f64) -> Result<Operator> {
    let a = Operator::a(space, label)?;
    Ok(a.mul(&a)?.add_identity(c(-alpha * alpha)))
}

/// Adds either the buffer exchange with `κ_b D[b]` or the eliminated
/// `κ₂ D[a² − α²]` stabilization of `cat`.
fn stabilize(model: &mut LindbladModel, spec: &GateSpec, cat: &str, buffer: Option<&str>) -> Result<()> {
    let space = model.space().clone();
    let a2 = spec.alpha * spec.alpha;
    match buffer {
        Some(b) => {
            let g2 = spec.g2();
            model.add_hamiltonian("exchange", exchange(&space, cat, b)?, TimeCoefficient::constant(g2))?;
            model.add_hamiltonian("pump", Operator::fock(&space, b, FockOp::X)?, TimeCoefficient::constant(-g2 * a2))?;
            model.add_dissipator(b, spec.rates.kappa_b.unwrap_or(0.0), Operator::a(&space, b)?)?;
        }
        None => {
            model.add_dissipator(&format!("two_photon_{cat}"), spec.kappa_2(), two_photon(&space, cat, spec.alpha)?)?;
        }
    }
    Ok(())
}

/// `cos(θ/2) α + i sin(θ/2) a`, with eigenvalue α e^{±iθ/2} on |±α⟩.
pub fn a_theta(space: &SpaceRef, label: &str, alpha: f64, theta: f64) -> Result<Operator> {
    let a = Operator::a(space, label)?;
    Ok(a.scale(Complex64::new(0.0, (0.5 * theta).sin())).add_identity(c((0.5 * theta).cos() * alpha)))
}

fn check_area(spec: &GateSpec, coeff: &TimeCoefficient, area: f64) -> Result<()> {
    let got = coeff.integral(0.0, spec.gate_time).re;
    if (got - area).abs() > 1e-9 * area.abs().max(1e-300) {
        return Err(CatError::InvalidParameter(format!("drive integral {got} does not match θ/(4α) = {area}")));
    }
    Ok(())
}

fn after(t: f64, v: Complex64) -> (f64, f64, TimeCoefficient) {
    (t, f64::INFINITY, TimeCoefficient::Constant(v))
}

pub fn build(spec: &GateSpec) -> Result<GateModel> {
    spec.validate()?;
    match spec.design {
        Design::StandardZeno | Design::Photodetection | Design::AutonomousFeedback | Design::FlatHamiltonian { .. } => build_z_gate(spec),
        Design::DiscreteQubit | Design::DiscreteQutrit => build_discrete_gate(spec),
        Design::XGate => build_x_gate(spec),
        Design::CnotZeno | Design::CnotFlat { .. } | Design::CnotAutonomous => build_cnot(spec),
    }
}

/// Continuous Z(θ) designs: standard Zeno, photodetection, autonomous
/// feedback and locally flat drives.
pub fn build_z_gate(spec: &GateSpec) -> Result<GateModel> {
    spec.validate()?;
    let two_mode = !spec.eliminated;
    let da = spec.dim("a", spec.default_cat_dim());
    let mut modes = vec![bosonic("a", da)];
    if two_mode {
        modes.push(bosonic("b", spec.dim("b", 8)));
    }
    let space = HilbertSpace::new(modes)?;
    let mut model = LindbladModel::new(&space);
    let area = spec.theta / (4.0 * spec.alpha);
    let mut channels = Vec::new();
    let mut flat = None;
    match spec.design {
        Design::AutonomousFeedback => {
            let g2 = spec.g2();
            let a2 = spec.alpha * spec.alpha;
            model.add_hamiltonian("exchange", exchange(&space, "a", "b")?, TimeCoefficient::constant(g2))?;
            model.add_hamiltonian("pump", Operator::fock(&space, "b", FockOp::X)?, TimeCoefficient::constant(-g2 * a2))?;
            let ab = Operator::a(&space, "a")?.mul(&Operator::a(&space, "b")?)?;
            model.add_dissipator("ab", spec.rates.kappa_ab.unwrap_or(0.0), ab)?;
        }
        _ => stabilize(&mut model, spec, "a", two_mode.then_some("b"))?,
    }
    if let Design::FlatHamiltonian { order } = spec.design {
        let sol = solve_flat_drive(&FlatDriveProblem::standard(order, spec.alpha, spec.theta, spec.gate_time))?;
        let op = flat_hamiltonian_operator(&sol, &space, "a")?;
        let envelope = spec.drive_coefficient(spec.gate_time);
        check_area(spec, &envelope, spec.gate_time)?;
        model.add_drive("flat", op, envelope)?;
        flat = Some(sol);
    } else {
        let coeff = spec.drive_coefficient(area);
        check_area(spec, &coeff, area)?;
        model.add_drive("zeno", Operator::fock(&space, "a", FockOp::X)?, coeff)?;
    }
    if spec.design == Design::Photodetection {
        let ch = DetectionChannel::new("b", spec.eta.unwrap_or(0.0))?.with_feedback(Operator::sign_x(&space, "a")?)?;
        channels.push(ch);
    }
    let code = CatCode::new(da, c(spec.alpha))?;
    Ok(GateModel {
        spec: spec.clone(),
        model,
        channels,
        cat: "a".into(),
        target: None,
        buffer: two_mode.then(|| "b".to_string()),
        ancilla: None,
        code,
        rotation_sign: 1.0,
        flat,
        warnings: Vec::new(),
    })
}

pub fn build_standard_zeno(spec: &GateSpec) -> Result<GateModel> {
    expect_design(spec, &[Design::StandardZeno])?;
    build_z_gate(spec)
}

pub fn build_autonomous_feedback(spec: &GateSpec) -> Result<GateModel> {
    expect_design(spec, &[Design::AutonomousFeedback, Design::CnotAutonomous])?;
    build(spec)
}

fn expect_design(spec: &GateSpec, allowed: &[Design]) -> Result<()> {
    if !allowed.contains(&spec.design) {
        return Err(CatError::InvalidParameter(format!("wrong design {} for this builder", spec.design.name())));
    }
    Ok(())
}

/// Discrete jump gate on cat ⊗ ancilla with the eliminated stabilization.
pub fn build_discrete_gate(spec: &GateSpec) -> Result<GateModel> {
    expect_design(spec, &[Design::DiscreteQubit, Design::DiscreteQutrit])?;
    spec.validate()?;
    let qutrit = spec.design == Design::DiscreteQutrit;
    let da = spec.dim("a", spec.default_cat_dim());
    let anc = Mode { label: "q".into(), dim: if qutrit { 3 } else { 2 }, kind: if qutrit { ModeKind::Qutrit } else { ModeKind::Qubit } };
    let space = HilbertSpace::new(vec![bosonic("a", da), anc])?;
    let mut model = LindbladModel::new(&space);
    let mut warnings = Vec::new();
    let (alpha, theta) = (spec.alpha, spec.theta);
    let kz = spec.rates.kappa_z.unwrap_or(0.0);
    let k2 = spec.kappa_2();
    model.add_dissipator("two_photon_a", k2, two_photon(&space, "a", alpha)?)?;
    if k2 > 0.0 && kz / k2 >= 4.0 * alpha {
        warnings.push(format!("κ_Z/κ₂ = {:.3} is not small compared with 4α = {:.3}", kz / k2, 4.0 * alpha));
    }
    let ket = |i, j| Operator::ancilla(&space, "q", AncillaOp::Ket(i, j));
    if qutrit {
        let kzp = spec.rates.kappa_z_prime.unwrap_or(kz);
        if (kzp - kz).abs() > 1e-12 * kz.abs().max(1.0) {
            warnings.push(format!("qutrit paths have unequal rates κ_Z = {kz}, κ'_Z = {kzp}"));
        }
        let jumps = [
            ("jump_e", kz, a_theta(&space, "a", alpha, theta)?.mul(&ket(1, 0)?)?),
            ("jump_f", kz, a_theta(&space, "a", alpha, theta + PI)?.mul(&ket(2, 0)?)?),
            ("jump_fe", kzp, a_theta(&space, "a", alpha, PI)?.mul(&ket(1, 2)?)?),
        ];
        for (label, rate, op) in jumps {
            model.add_dissipator_sum(label, rate, vec![(op, TimeCoefficient::one())], true)?;
        }
        let kq = spec.rates.kappa_q.unwrap_or(0.0);
        model.add_dissipator("decay_e", kq, ket(0, 1)?)?;
        model.add_dissipator("decay_f", kq, ket(1, 2)?)?;
    } else {
        let op = a_theta(&space, "a", alpha, theta)?.mul(&Operator::ancilla(&space, "q", AncillaOp::SigmaPlus)?)?;
        model.add_dissipator_sum("jump", kz, vec![(op, TimeCoefficient::one())], true)?;
        model.add_dissipator("decay", spec.rates.kappa_q.unwrap_or(0.0), Operator::ancilla(&space, "q", AncillaOp::SigmaMinus)?)?;
    }
    Ok(GateModel {
        spec: spec.clone(),
        model,
        channels: Vec::new(),
        cat: "a".into(),
        target: None,
        buffer: None,
        ancilla: Some("q".into()),
        code: CatCode::new(da, c(alpha))?,
        rotation_sign: -1.0,
        flat: None,
        warnings,
    })
}

/// X gate by a rotating two-photon setpoint and H = Δa†a on [0, T].
pub fn build_x_gate(spec: &GateSpec) -> Result<GateModel> {
    expect_design(spec, &[Design::XGate])?;
    spec.validate()?;
    let (alpha, t_gate) = (spec.alpha, spec.gate_time);
    let a2 = alpha * alpha;
    let delta = spec.rates.delta.unwrap_or(0.0);
    let da = spec.dim("a", spec.default_cat_dim());
    let two_mode = !spec.eliminated;
    let mut modes = vec![bosonic("a", da)];
    if two_mode {
        modes.push(bosonic("b", spec.dim("b", 8)));
    }
    let space = HilbertSpace::new(modes)?;
    let mut model = LindbladModel::new(&space);
    model.add_drive("detuning", Operator::n(&space, "a")?, TimeCoefficient::window(delta, t_gate))?;
    let end_phase = -2.0 * delta * t_gate;
    if two_mode {
        let g2 = spec.g2();
        model.add_hamiltonian("exchange", exchange(&space, "a", "b")?, TimeCoefficient::constant(g2))?;
        // −g₂α²(e^{−2iΔt} b† + h.c.) = −g₂α²[cos(2Δt) X_b − sin(2Δt) P_b]
        let xb = TimeCoefficient::Piecewise(vec![
            (0.0, t_gate, TimeCoefficient::Cosine { amplitude: -g2 * a2, omega: 2.0 * delta, phase: 0.0 }),
            after(t_gate, c(-g2 * a2 * end_phase.cos())),
        ]);
        let pb = TimeCoefficient::Piecewise(vec![
            (0.0, t_gate, TimeCoefficient::Cosine { amplitude: g2 * a2, omega: 2.0 * delta, phase: -0.5 * PI }),
            after(t_gate, c(-g2 * a2 * end_phase.sin())),
        ]);
        model.add_hamiltonian("pump_x", Operator::fock(&space, "b", FockOp::X)?, xb)?;
        model.add_hamiltonian("pump_p", Operator::fock(&space, "b", FockOp::P)?, pb)?;
        model.add_dissipator("b", spec.rates.kappa_b.unwrap_or(0.0), Operator::a(&space, "b")?)?;
    } else {
        let a = Operator::a(&space, "a")?;
        let setpoint = TimeCoefficient::Piecewise(vec![
            (0.0, t_gate, TimeCoefficient::Rotating { amplitude: c(-a2), omega: -2.0 * delta, phase: 0.0 }),
            after(t_gate, Complex64::from_polar(-a2, end_phase)),
        ]);
        let terms = vec![(a.mul(&a)?, TimeCoefficient::one()), (Operator::identity(&space), setpoint)];
        model.add_dissipator_sum("two_photon_a", spec.kappa_2(), terms, false)?;
    }
    Ok(GateModel {
        spec: spec.clone(),
        model,
        channels: Vec::new(),
        cat: "a".into(),
        target: None,
        buffer: two_mode.then(|| "b".to_string()),
        ancilla: None,
        code: CatCode::new(da, c(alpha))?,
        rotation_sign: 1.0,
        flat: None,
        warnings: Vec::new(),
    })
}

/// CNOT on control `c` and target `t`.
///
/// The target rotates at Δ = π/T for control |−α⟩. The Hamiltonian term
/// carries the sign that makes this rotation follow the setpoint of L_T(t).
pub fn build_cnot(spec: &GateSpec) -> Result<GateModel> {
    expect_design(spec, &[Design::CnotZeno, Design::CnotFlat { order: spec.design.order() }, Design::CnotAutonomous])?;
    spec.validate()?;
    let (alpha, t_gate) = (spec.alpha, spec.gate_time);
    let a2 = alpha * alpha;
    let delta = PI / t_gate;
    let eps = delta / (4.0 * alpha);
    let dc = spec.dim("c", spec.default_cat_dim());
    let dt = spec.dim("t", spec.default_cat_dim());
    let autonomous = spec.design == Design::CnotAutonomous;
    let with_buffer = autonomous || !spec.eliminated;
    let mut modes = vec![bosonic("c", dc)];
    if with_buffer {
        modes.push(bosonic("b", spec.dim("b", 8)));
    }
    modes.push(bosonic("t", dt));
    let space = HilbertSpace::new(modes)?;
    let mut model = LindbladModel::new(&space);
    if autonomous {
        let g2 = spec.g2();
        model.add_hamiltonian("exchange", exchange(&space, "c", "b")?, TimeCoefficient::constant(g2))?;
        model.add_hamiltonian("pump", Operator::fock(&space, "b", FockOp::X)?, TimeCoefficient::constant(-g2 * a2))?;
        let ab = Operator::a(&space, "c")?.mul(&Operator::a(&space, "b")?)?;
        model.add_dissipator("ab", spec.rates.kappa_ab.unwrap_or(0.0), ab)?;
    } else {
        stabilize(&mut model, spec, "c", with_buffer.then_some("b"))?;
    }

    let np = spec.n_p() as f64;
    let target_n = Operator::n(&space, "t")?.add_identity(c(-np));
    let mut flat = None;
    let (control, coeff) = match spec.design {
        Design::CnotFlat { order } => {
            let problem = FlatDriveProblem { order, alpha, theta: PI, gate_time: t_gate, epsilon_z: eps };
            let sol = solve_flat_drive(&problem)?;
            let op = flat_hamiltonian_operator(&sol, &space, "c")?.add_identity(c(-2.0 * alpha * eps));
            flat = Some(sol);
            (op, spec.drive_coefficient(-t_gate))
        }
        _ => {
            let op = Operator::fock(&space, "c", FockOp::X)?.add_identity(c(-2.0 * alpha));
            (op, spec.drive_coefficient(-eps * t_gate))
        }
    };
    let h = control.mul(&target_n)?.with_hermitian_hint(true);
    model.add_drive("cx", h, coeff)?;

    let k2 = spec.kappa_2();
    let at = Operator::a(&space, "t")?;
    let at2 = at.mul(&at)?;
    let id = Operator::identity(&space);
    match spec.cnot_variant {
        CnotVariant::DissipativeTarget => {
            let ac = Operator::a(&space, "c")?;
            let end = Complex64::from_polar(1.0, -2.0 * delta * t_gate);
            let rot = |amp: f64| {
                TimeCoefficient::Piecewise(vec![
                    (0.0, t_gate, TimeCoefficient::Rotating { amplitude: c(amp), omega: -2.0 * delta, phase: 0.0 }),
                    after(t_gate, end * amp),
                ])
            };
            let terms = vec![
                (at2, TimeCoefficient::one()),
                (ac.clone(), TimeCoefficient::constant(-0.5 * alpha)),
                (id.clone(), TimeCoefficient::constant(-0.5 * a2)),
                (ac, rot(0.5 * alpha)),
                (id, rot(-0.5 * a2)),
            ];
            model.add_dissipator_sum("two_photon_t", k2, terms, false)?;
        }
        CnotVariant::HamiltonianOnly => {
            let on = |v: f64| TimeCoefficient::Piecewise(vec![after(t_gate, c(v))]);
            model.add_dissipator_sum("two_photon_t", k2, vec![(at2, on(1.0)), (id, on(-a2))], false)?;
        }
    }
    Ok(GateModel {
        spec: spec.clone(),
        model,
        channels: Vec::new(),
        cat: "c".into(),
        target: Some("t".into()),
        buffer: with_buffer.then(|| "b".to_string()),
        ancilla: None,
        code: CatCode::new(dc, c(alpha))?,
        rotation_sign: 1.0,
        flat,
        warnings: Vec::new(),
    })
}

impl GateModel {
    pub fn space(&self) -> &SpaceRef {
        self.model.space()
    }

    /// Cat in `which`, every other mode in its ground state.
    pub fn initial(&self, which: Logical) -> Result<QuantumState> {
        let mut factors = vec![(self.cat.as_str(), self.code.logical(which))];
        if let Some(t) = &self.target {
            let code = CatCode::new(self.space().mode(t)?.dim, self.code.alpha)?;
            factors.push((t.as_str(), code.logical(Logical::Plus)));
        }
        QuantumState::product(self.space(), &factors)
    }

    /// Control and target logical states of a CNOT.
    pub fn initial_pair(&self, control: Logical, target: Logical) -> Result<QuantumState> {
        let t = self.target.as_deref().ok_or_else(|| CatError::InvalidParameter("not a two-qubit gate".into()))?;
        let code_t = CatCode::new(self.space().mode(t)?.dim, self.code.alpha)?;
        QuantumState::product(self.space(), &[(self.cat.as_str(), self.code.logical(control)), (t, code_t.logical(target))])
    }

    pub fn target_code(&self) -> Result<Option<CatCode>> {
        match &self.target {
            Some(t) => Ok(Some(CatCode::new(self.space().mode(t)?.dim, self.code.alpha)?)),
            None => Ok(None),
        }
    }

    pub fn parity(&self) -> Result<Operator> {
        Operator::parity(self.space(), &self.cat)
    }

    /// Parity, buffer population and (for CNOT) target parity observables.
    pub fn observables(&self) -> Result<Vec<(String, Operator)>> {
        let mut obs = vec![("parity".to_string(), self.parity()?)];
        if let Some(b) = &self.buffer {
            obs.push(("n_b".into(), Operator::n(self.space(), b)?));
        }
        if let Some(t) = &self.target {
            let pt = Operator::parity(self.space(), t)?;
            obs.push(("parity_t".into(), pt.clone()));
            obs.push(("parity_ct".into(), self.parity()?.mul(&pt)?));
        }
        Ok(obs)
    }

    pub fn evolve_options(&self, tol: Tolerances) -> EvolveOptions {
        EvolveOptions { tol, leakage: None }.leakage_of(&self.cat, self.code.clone())
    }

    /// Deterministic model (ensemble average when channels are present).
    pub fn averaged_model(&self) -> Result<LindbladModel> {
        feedback_averaged_model(&self.model, &self.channels)
    }

    /// Ideal logical output Z(sθ)|init⟩ in the {|0⟩, |1⟩} basis.
    pub fn ideal_output(&self, initial: Logical) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = match initial {
            Logical::Zero => [c(1.0), c(0.0)],
            Logical::One => [c(0.0), c(1.0)],
            Logical::Plus => [c(s), c(s)],
            Logical::Minus => [c(s), c(-s)],
        };
        let phi = self.rotation_sign * self.spec.theta;
        if self.spec.design == Design::XGate {
            return [v[1], v[0]];
        }
        [v[0] * Complex64::from_polar(1.0, -0.5 * phi), v[1] * Complex64::from_polar(1.0, 0.5 * phi)]
    }

    /// Averaged evolution over the gate window on `n_points` times.
    pub fn run(&self, initial: &QuantumState, n_points: usize, tol: Tolerances) -> Result<EvolutionResult> {
        let grid = linspace(0.0, self.spec.gate_time, n_points.max(2));
        evolve(&self.averaged_model()?, initial, &grid, &self.observables()?, &self.evolve_options(tol))
    }

    /// Drive-off evolution from the end of the gate until the cat is back
    /// in its codespace and the buffer is empty.
    pub fn reconverge(&self, state: &QuantumState, tolerance: f64, max_time: f64, tol: Tolerances) -> Result<Reconvergence> {
        let opts = ReconvergeOptions {
            tolerance,
            check_interval: (2.0 / self.spec.kappa_2().max(1e-3)).min(max_time),
            max_time,
            t_start: self.spec.gate_time,
            buffer: self.buffer.clone(),
        };
        reconverge(&self.averaged_model()?.undriven(), state, &opts, &self.evolve_options(tol))
    }

    /// Best Z correction after a single click at `t_jump` (photodetection).
    pub fn optimal_feedback_angle(&self, t_jump: f64, settle_time: f64, tol: Tolerances) -> Result<FeedbackAngle> {
        let channel = self.channels.first().ok_or_else(|| CatError::InvalidParameter("design has no detection channel".into()))?;
        let problem = FeedbackAngleProblem {
            model: self.model.clone(),
            channel: channel.clone(),
            initial: self.initial(Logical::Plus)?,
            gate_time: self.spec.gate_time,
            settle_time,
            cat_label: self.cat.clone(),
            code: self.code.clone(),
            target: self.ideal_output(Logical::Plus),
            tol,
        };
        optimal_feedback_angle(&problem, t_jump)
    }
}

/// Two-mode discrete-gate operators.
#[derive(Clone, Debug)]
pub struct DiscreteJumpOperators {
    pub space: SpaceRef,
    /// −a₁(a₂ − α) + α(a₂ + α).
    pub l_cz: Operator,
    /// α I ⊗ P₊ + a ⊗ P₋.
    pub l_cx: Operator,
    /// Target parity projectors.
    pub parity_plus: Operator,
    pub parity_minus: Operator,
}

pub fn build_discrete_two_qubit_operators(alpha: f64, dims: (usize, usize)) -> Result<DiscreteJumpOperators> {
    let space = HilbertSpace::bosonic(&[("c", dims.0), ("t", dims.1)])?;
    let a1 = Operator::a(&space, "c")?;
    let a2 = Operator::a(&space, "t")?;
    let l_cz = a1.mul(&a2.add_identity(c(-alpha)))?.scale_re(-1.0).add(&a2.add_identity(c(alpha)).scale_re(alpha))?;
    let pt = Operator::parity(&space, "t")?;
    let parity_plus = pt.add_identity(c(1.0)).scale_re(0.5);
    let parity_minus = pt.add_identity(c(-1.0)).scale_re(0.5);
    let l_cx = parity_plus.scale_re(alpha).add(&a1.mul(&parity_minus)?)?;
    Ok(DiscreteJumpOperators { space, l_cz, l_cx, parity_plus, parity_minus })
}

/// Qutrit-design jump operators a_θ|e⟩⟨g|, a_{θ+π}|f⟩⟨g|, a_π|e⟩⟨f| with
/// their rates.
pub fn qutrit_channels(space: &SpaceRef, cat: &str, ancilla: &str, alpha: f64, theta: f64, kappa_z: f64, kappa_z_prime: f64) -> Result<Vec<(Operator, f64)>> {
    space.require_kind(ancilla, &[ModeKind::Qutrit])?;
    let ket = |i, j| Operator::ancilla(space, ancilla, AncillaOp::Ket(i, j));
    Ok(vec![
        (a_theta(space, cat, alpha, theta)?.mul(&ket(1, 0)?)?, kappa_z),
        (a_theta(space, cat, alpha, theta + PI)?.mul(&ket(2, 0)?)?, kappa_z),
        (a_theta(space, cat, alpha, PI)?.mul(&ket(1, 2)?)?, kappa_z_prime),
    ])
}

/// Coherent state amplitude vector helper for eigen-action checks.
pub fn cat_state(dim: usize, alpha: f64, sign: i8) -> Result<Vec<Complex64>> {
    cat_amplitudes(dim, c(alpha), sign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeno(alpha: f64) -> GateSpec {
        GateSpec::new(Design::StandardZeno, PI, 10.0, alpha).with_rates(Rates { g2: Some(1.0), kappa_b: Some(8.0), ..Rates::default() })
    }

    #[test]
    fn rejects_foreign_rates() {
        let mut s = zeno(2.0);
        s.rates.kappa_z = Some(0.1);
        assert!(s.validate().is_err());
        let s = zeno(2.0).with_eta(0.5);
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_ambiguous_damping() {
        let s = GateSpec::new(Design::AutonomousFeedback, PI, 10.0, 2.0).with_rates(Rates { g2: Some(1.0), kappa_b: Some(8.0), kappa_ab: Some(2.0), ..Rates::default() });
        let e = s.validate().unwrap_err().to_string();
        assert!(e.contains("ambiguous"), "{e}");
    }

    #[test]
    fn rejects_odd_np() {
        let mut s = GateSpec::new(Design::CnotZeno, PI, 10.0, 2.0).with_rates(Rates { g2: Some(1.0), kappa_b: Some(8.0), ..Rates::default() });
        s.n_p = Some(3);
        assert!(s.validate().is_err());
        s.n_p = Some(4);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn zeno_model_is_hermitian() {
        let g = build(&zeno(2.0).with_dim("a", 20).with_dim("b", 5)).unwrap();
        g.model.check_hermitian(10.0).unwrap();
        assert_eq!(g.model.dissipators.len(), 1);
    }
}
