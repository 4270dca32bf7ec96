//! Browser bindings for a few cheap catgates calculations.
//!
//! Each export has a plain Rust counterpart so the numerics can be tested
//! natively; the wasm wrappers only translate errors.

use std::f64::consts::PI;

use catgates::dynamics::{analytic_buffer_trajectory, linspace};
use catgates::flat::{solve_flat_drive, FlatDriveProblem};
use catgates::gates::{build, Design, GateSpec, Rates};
use catgates::metrics::{phase_error, zeno_phase_error};
use catgates::ode::Tolerances;
use catgates::{Logical, TimeCoefficient};
use wasm_bindgen::prelude::*;

/// Largest mean photon number the in-browser gate run accepts.
pub const MAX_GATE_ALPHA2: f64 = 4.0;

/// Flat-drive profile sampled on x ∈ [−x_max, x_max].
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct FlatProfile {
    x: Vec<f64>,
    drive: Vec<f64>,
    linear: Vec<f64>,
    coefficients: Vec<f64>,
    variance: f64,
}

#[wasm_bindgen]
impl FlatProfile {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    /// Optimized drive ε_Z Σ c_n x^{2n+1}.
    #[wasm_bindgen(getter)]
    pub fn drive(&self) -> Vec<f64> {
        self.drive.clone()
    }
    /// Order-zero drive with the same rotation, for comparison.
    #[wasm_bindgen(getter)]
    pub fn linear(&self) -> Vec<f64> {
        self.linear.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn coefficients(&self) -> Vec<f64> {
        self.coefficients.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn variance(&self) -> f64 {
        self.variance
    }
}

pub fn flat_profile_native(alpha2: f64, order: usize, gate_time: f64, n_points: usize) -> catgates::Result<FlatProfile> {
    let alpha = alpha2.sqrt();
    let sol = solve_flat_drive(&FlatDriveProblem::standard(order, alpha, PI, gate_time))?;
    let lin = solve_flat_drive(&FlatDriveProblem::standard(0, alpha, PI, gate_time))?;
    let x = linspace(-2.0 * alpha, 2.0 * alpha, n_points.max(2));
    Ok(FlatProfile {
        drive: x.iter().map(|&v| sol.profile(v)).collect(),
        linear: x.iter().map(|&v| lin.profile(v)).collect(),
        coefficients: sol.coefficients.clone(),
        variance: sol.variance,
        x,
    })
}

/// Mean cat and buffer amplitudes during a constant Zeno drive.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct BufferTrajectory {
    times: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[wasm_bindgen]
impl BufferTrajectory {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    /// Interleaved (Re, Im) of ⟨a⟩.
    #[wasm_bindgen(getter)]
    pub fn a(&self) -> Vec<f64> {
        self.a.clone()
    }
    /// Interleaved (Re, Im) of ⟨b⟩.
    #[wasm_bindgen(getter)]
    pub fn b(&self) -> Vec<f64> {
        self.b.clone()
    }
}

pub fn buffer_trajectory_native(alpha: f64, kappa_b: f64, gate_time: f64, n_points: usize) -> catgates::Result<BufferTrajectory> {
    // drive switched off at T so the relaxation is visible
    let eps = TimeCoefficient::window(PI / (4.0 * alpha * gate_time), gate_time);
    let times = linspace(0.0, 2.0 * gate_time, n_points.max(2));
    let (a, b) = analytic_buffer_trajectory(1.0, kappa_b, alpha, &eps, &times, 1.0)?;
    let flat = |v: Vec<catgates::Complex64>| v.into_iter().flat_map(|z| [z.re, z.im]).collect();
    Ok(BufferTrajectory { times, a: flat(a), b: flat(b) })
}

/// Phase-flip probability during a small Zeno Z gate, with its prediction.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct GateRun {
    times: Vec<f64>,
    parity: Vec<f64>,
    p_z: f64,
    predicted: f64,
}

#[wasm_bindgen]
impl GateRun {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn parity(&self) -> Vec<f64> {
        self.parity.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn p_z(&self) -> f64 {
        self.p_z
    }
    #[wasm_bindgen(getter)]
    pub fn predicted(&self) -> f64 {
        self.predicted
    }
}

pub fn zeno_gate_native(alpha2: f64, kappa_b: f64, gate_time: f64, n_points: usize) -> catgates::Result<GateRun> {
    if !(alpha2 > 0.0 && alpha2 <= MAX_GATE_ALPHA2) {
        return Err(catgates::CatError::InvalidParameter(format!("alpha2 must lie in (0, {MAX_GATE_ALPHA2}]")));
    }
    let spec = GateSpec::new(Design::StandardZeno, PI, gate_time, alpha2.sqrt())
        .with_rates(Rates { g2: Some(1.0), kappa_b: Some(kappa_b), ..Rates::default() })
        .with_dim("a", (4.0 * alpha2 + 6.0).ceil() as usize)
        .with_dim("b", 4);
    let gate = build(&spec)?;
    let tol = Tolerances { rtol: 1e-6, atol: 1e-8, ..Tolerances::default() };
    let r = gate.run(&gate.initial(Logical::Plus)?, n_points, tol)?;
    let parity = r.series("parity").map(|s| s.iter().map(|z| z.re).collect()).unwrap_or_default();
    let p_z = phase_error(&r.final_state, &gate.cat, &gate.code, PI, gate.rotation_sign, Logical::Plus)?.p_z;
    Ok(GateRun { times: r.times, parity, p_z, predicted: zeno_phase_error(PI, alpha2, spec.kappa_2(), gate_time) })
}

fn js(e: catgates::CatError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn flat_profile(alpha2: f64, order: usize, gate_time: f64, n_points: usize) -> Result<FlatProfile, JsError> {
    flat_profile_native(alpha2, order, gate_time, n_points).map_err(js)
}

#[wasm_bindgen]
pub fn buffer_trajectory(alpha: f64, kappa_b: f64, gate_time: f64, n_points: usize) -> Result<BufferTrajectory, JsError> {
    buffer_trajectory_native(alpha, kappa_b, gate_time, n_points).map_err(js)
}

#[wasm_bindgen]
pub fn zeno_gate(alpha2: f64, kappa_b: f64, gate_time: f64, n_points: usize) -> Result<GateRun, JsError> {
    zeno_gate_native(alpha2, kappa_b, gate_time, n_points).map_err(js)
}
