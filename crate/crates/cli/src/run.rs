use std::f64::consts::PI;

use anyhow::{Context, Result};
use catgates::dynamics::{evolve, linspace, EvolveOptions};
use catgates::gates::{build, Design, GateModel};
use catgates::metrics::{bit_error, cnot_error_probabilities, phase_error, BitInvariant};
use catgates::noise::apply_noise_to_gate;
use catgates::stochastic::{TrajectoryEnsemble, TrajectoryOptions, Unraveling};
use catgates::{CatError, Logical, Operator, QuantumState};

use crate::config::{ConfigError, EngineKind, ReconvergenceMode, RunConfig, UnravelingKind, OPERATOR_OBSERVABLES};

/// Numeric table written as one CSV; the first column is the abscissa.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Builds a table from named columns of equal length.
    pub fn from_columns(cols: Vec<(&str, Vec<f64>)>) -> Self {
        let n = cols.first().map_or(0, |c| c.1.len());
        let mut t = Table::new(&cols.iter().map(|c| c.0).collect::<Vec<_>>());
        for i in 0..n {
            t.push(cols.iter().map(|c| c.1[i]).collect());
        }
        t
    }
}

/// Output of one simulation point.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub table: Table,
    pub warnings: Vec<String>,
}

pub fn gate_model(cfg: &RunConfig) -> Result<GateModel> {
    // parameter and truncation problems at build time are the config's fault
    let gate = build(&cfg.gate).map_err(|e| match e {
        CatError::InvalidParameter(_) | CatError::Truncation { .. } | CatError::InvalidDimension { .. } | CatError::UnknownMode(_) => {
            anyhow::Error::new(ConfigError(format!("gate: {e}")))
        }
        other => anyhow::Error::new(other).context("building gate model"),
    })?;
    match &cfg.noise {
        Some(n) if !n.is_zero() => Ok(apply_noise_to_gate(&gate, n)?),
        _ => Ok(gate),
    }
}

/// Rotation accumulated by the drive up to `t`; discrete designs aim at the
/// full angle from the start.
pub fn target_angle(gate: &GateModel, t: f64) -> f64 {
    let spec = &gate.spec;
    if matches!(spec.design, Design::DiscreteQubit | Design::DiscreteQutrit | Design::XGate) {
        return spec.theta;
    }
    let c = spec.drive_coefficient(1.0);
    let total = c.integral(0.0, spec.gate_time).re;
    let frac = if total > 0.0 { c.integral(0.0, t.min(spec.gate_time)).re / total } else { 1.0 };
    // snap so that the parity proxy applies exactly at the end of the drive
    if (frac - 1.0).abs() < 1e-12 {
        spec.theta
    } else {
        spec.theta * frac
    }
}

fn operator(gate: &GateModel, name: &str) -> Result<Operator> {
    let space = gate.space();
    let need = |m: &Option<String>, what: &str| m.clone().with_context(|| format!("observable `{name}` needs a {what} mode"));
    Ok(match name {
        "parity" => gate.parity()?,
        "parity_t" => Operator::parity(space, &need(&gate.target, "target")?)?,
        "parity_ct" => gate.parity()?.mul(&Operator::parity(space, &need(&gate.target, "target")?)?)?,
        "n_a" => Operator::n(space, &gate.cat)?,
        "n_b" => Operator::n(space, &need(&gate.buffer, "buffer")?)?,
        "re_a" | "im_a" => Operator::a(space, &gate.cat)?,
        "re_b" | "im_b" => Operator::a(space, &need(&gate.buffer, "buffer")?)?,
        other => anyhow::bail!("`{other}` is not an operator observable"),
    })
}

fn is_imag(name: &str) -> bool {
    name.starts_with("im_")
}

struct Sampler {
    ops: Vec<(String, Operator)>,
    columns: Vec<String>,
    initial: Logical,
    invariant: Option<BitInvariant>,
}

impl Sampler {
    fn new(cfg: &RunConfig, gate: &GateModel) -> Result<Self> {
        let mut ops = Vec::new();
        for name in &cfg.output.observables {
            if OPERATOR_OBSERVABLES.contains(&name.as_str()) {
                ops.push((name.clone(), operator(gate, name)?));
            }
        }
        let invariant = if cfg.output.observables.iter().any(|o| o == "p_X") {
            Some(BitInvariant::new(gate.code.alpha.re, gate.code.dim())?)
        } else {
            None
        };
        let mut columns = vec!["time".to_string()];
        columns.extend(cfg.output.observables.iter().cloned());
        Ok(Self { ops, columns, initial: cfg.output.initial.into(), invariant })
    }

    fn row(&self, cfg: &RunConfig, gate: &GateModel, t: f64, state: &QuantumState) -> Result<Vec<f64>> {
        let mut row = vec![t];
        let mut cnot: Option<(f64, f64, f64)> = None;
        for name in &cfg.output.observables {
            let v = match name.as_str() {
                "leakage" => gate.code.leakage(&state.reduced(&gate.cat)?),
                "p_Z" => phase_error(state, &gate.cat, &gate.code, target_angle(gate, t), gate.rotation_sign, self.initial)?.p_z,
                "p_X" => bit_error(state, &gate.cat, self.invariant.as_ref().unwrap(), self.initial)?,
                "p_ZC" | "p_ZT" | "p_ZCZT" => {
                    let probs = match cnot {
                        Some(p) => p,
                        None => {
                            let e = |n: &str| -> Result<f64> { Ok(state.expectation(&operator(gate, n)?)?.re) };
                            let p = cnot_error_probabilities(e("parity")?, e("parity_t")?, e("parity_ct")?);
                            cnot = Some(p);
                            p
                        }
                    };
                    match name.as_str() {
                        "p_ZC" => probs.0,
                        "p_ZT" => probs.1,
                        _ => probs.2,
                    }
                }
                _ => {
                    let op = &self.ops.iter().find(|(l, _)| l == name).unwrap().1;
                    let z = state.expectation(op)?;
                    if is_imag(name) {
                        z.im
                    } else {
                        z.re
                    }
                }
            };
            row.push(v);
        }
        Ok(row)
    }
}

fn initial_state(cfg: &RunConfig, gate: &GateModel) -> Result<QuantumState> {
    let which: Logical = cfg.output.initial.into();
    if gate.spec.design.is_cnot() {
        Ok(gate.initial_pair(which, Logical::Plus)?)
    } else {
        Ok(gate.initial(which)?)
    }
}

fn output_grid(cfg: &RunConfig) -> Vec<f64> {
    let t_end = match cfg.reconvergence.mode {
        ReconvergenceMode::Fixed => cfg.gate.gate_time + cfg.reconvergence.t_c.unwrap_or(0.0),
        _ => cfg.gate.gate_time,
    };
    linspace(0.0, t_end, cfg.output.n_points)
}

pub fn run_point(cfg: &RunConfig, seed: u64) -> Result<PointResult> {
    let gate = gate_model(cfg)?;
    let mut warnings = gate.warnings.clone();
    let table = match cfg.engine.kind {
        EngineKind::Deterministic => deterministic(cfg, &gate, &mut warnings)?,
        EngineKind::Stochastic => stochastic(cfg, &gate, seed)?,
    };
    Ok(PointResult { table, warnings })
}

fn deterministic(cfg: &RunConfig, gate: &GateModel, warnings: &mut Vec<String>) -> Result<Table> {
    let model = gate.averaged_model()?;
    let tol = cfg.engine.tolerances();
    let opts = EvolveOptions { tol, leakage: None };
    let sampler = Sampler::new(cfg, gate)?;
    let grid = output_grid(cfg);
    let mut table = Table { columns: sampler.columns.clone(), rows: Vec::new() };
    let mut state = initial_state(cfg, gate)?;
    table.push(sampler.row(cfg, gate, grid[0], &state)?);
    // segment by segment so that state-derived metrics see every grid time
    for w in grid.windows(2) {
        state = evolve(&model, &state, w, &[], &opts).with_context(|| format!("integrating [{}, {}]", w[0], w[1]))?.final_state;
        table.push(sampler.row(cfg, gate, w[1], &state)?);
    }
    if cfg.reconvergence.mode == ReconvergenceMode::Converged {
        let rc = &cfg.reconvergence;
        let max_time = rc.max_time.unwrap_or(20.0 * cfg.gate.gate_time.max(1.0));
        let r = gate.reconverge(&state, rc.tolerance.unwrap(), max_time, tol)?;
        if !r.converged {
            warnings.push(format!("reconvergence not reached within {max_time}"));
        }
        table.push(sampler.row(cfg, gate, cfg.gate.gate_time + r.time, &r.result.final_state)?);
    }
    Ok(table)
}

fn stochastic(cfg: &RunConfig, gate: &GateModel, seed: u64) -> Result<Table> {
    let grid = output_grid(cfg);
    let mut ops = Vec::new();
    for name in &cfg.output.observables {
        if name == "p_Z" {
            if !ops.iter().any(|(l, _): &(String, Operator)| l == "parity") {
                ops.push(("parity".to_string(), gate.parity()?));
            }
        } else if !ops.iter().any(|(l, _)| l == name) {
            ops.push((name.clone(), operator(gate, name)?));
        }
    }
    let unraveling = match cfg.engine.unraveling {
        UnravelingKind::Ket => Unraveling::Ket,
        UnravelingKind::Density => Unraveling::Density,
    };
    let opts = TrajectoryOptions { tol: cfg.engine.tolerances(), unraveling };
    let init = initial_state(cfg, gate)?;
    let ens = TrajectoryEnsemble::run(&gate.model, &gate.channels, &init, &grid, &ops, cfg.engine.n_traj, seed, &opts)?;
    let start: f64 = match cfg.output.initial.into() {
        Logical::Plus => 1.0,
        Logical::Minus => -1.0,
        _ => 0.0,
    };
    let mut cols: Vec<(String, Vec<f64>)> = vec![("time".into(), grid.clone())];
    for name in &cfg.output.observables {
        if name == "p_Z" {
            // parity proxy against the nearest whole number of half turns,
            // exact at the end of the drive
            let (mean, se) = ens.mean_of("parity").unwrap();
            let ideal: Vec<f64> = grid
                .iter()
                .map(|&t| {
                    let turns = (target_angle(gate, t) / PI).round() as i64;
                    if turns % 2 == 0 {
                        start
                    } else {
                        -start
                    }
                })
                .collect();
            cols.push(("p_Z".into(), mean.iter().zip(&ideal).map(|(m, s)| 0.5 * (1.0 - m.re / s)).collect()));
            cols.push(("p_Z_se".into(), se.iter().map(|s| 0.5 * s).collect()));
        } else {
            let (mean, se) = ens.mean_of(name).unwrap();
            cols.push((name.clone(), mean.iter().map(|z| if is_imag(name) { z.im } else { z.re }).collect()));
            cols.push((format!("{name}_se"), se.to_vec()));
        }
    }
    Ok(Table::from_columns(cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect()))
}
