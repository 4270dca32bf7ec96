use std::f64::consts::PI;

use anyhow::Result;
use catgates::gates::{build, Design, GateSpec, Rates};
use catgates::noise::{compare_adiabatic_elimination, phase_conjugation_check, simulate_thermal_autonomous, simulate_thermal_photodetection, ThermalSetup};
use catgates::ode::Tolerances;
use serde::Serialize;

use crate::presets::Scale;
use crate::run::Table;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

pub struct Suite {
    pub checks: Vec<Check>,
    pub tables: Vec<(String, Table)>,
}

pub fn conjugation() -> Result<Check> {
    let spec = GateSpec::new(Design::StandardZeno, PI, 4.0, 1.0)
        .with_rates(Rates { g2: Some(1.0), kappa_b: Some(8.0), ..Rates::default() })
        .with_dim("a", 10)
        .with_dim("b", 4);
    let r = phase_conjugation_check(&build(&spec)?.model, 1.0)?;
    Ok(Check {
        name: "phase_conjugation".into(),
        pass: r.guaranteed() && r.commutator_norm < 1e-10,
        value: r.commutator_norm,
        threshold: 1e-10,
        detail: format!("involution defect {:.1e}, uncovered terms {:?}", r.involution_defect, r.uncovered),
    })
}

pub fn elimination(scale: Scale) -> Result<(Check, Table)> {
    let t = match scale {
        Scale::Desk => 10.0,
        Scale::Paper => 20.0,
    };
    let spec = GateSpec::new(Design::AutonomousFeedback, PI, t, 2.0)
        .with_rates(Rates { g2: Some(1.0), kappa_ab: Some(2.0), ..Rates::default() })
        .with_dim("a", 24)
        .with_dim("b", 6);
    let cmp = compare_adiabatic_elimination(&spec, 41, Tolerances::default())?;
    let check = Check {
        name: "adiabatic_elimination".into(),
        pass: cmp.max_deviation < 0.1,
        value: cmp.max_deviation,
        threshold: 0.1,
        detail: format!("kappa_ab |alpha|^2 = 8, T = {t}; warnings {:?}", cmp.warnings),
    };
    let table = Table::from_columns(vec![("time", cmp.times.clone()), ("parity_full", cmp.parity_full.clone()), ("parity_reduced", cmp.parity_reduced.clone())]);
    Ok((check, table))
}

fn thermal_table(times: &[f64], parity: &[f64], gamma: f64, predicted: f64) -> Table {
    Table::from_columns(vec![
        ("time", times.to_vec()),
        ("parity", parity.to_vec()),
        ("fit", times.iter().map(|t| parity[0] * (-gamma * t).exp()).collect()),
        ("prediction", times.iter().map(|t| parity[0] * (-predicted * t).exp()).collect()),
    ])
}

pub fn thermal(scale: Scale, seed: u64) -> Result<Vec<(Check, String, Table)>> {
    let tol = Tolerances::default();
    let n_traj = match scale {
        Scale::Desk => 1000,
        Scale::Paper => 4000,
    };
    let pd = ThermalSetup { alpha: 2.0, kappa: 8.0, n_th: 0.02, eta: 1.0, dims: (20, 6), duration: 6.0, n_points: 31, fit_start: 1.0 };
    let pd = simulate_thermal_photodetection(&pd, n_traj, seed, tol)?;
    let au = ThermalSetup { alpha: 2.0, kappa: 1.0, n_th: 0.02, eta: 1.0, dims: (20, 6), duration: 40.0, n_points: 41, fit_start: 5.0 };
    let au = simulate_thermal_autonomous(&au, tol)?;
    let mut out = Vec::new();
    for (name, d) in [("thermal_photodetection", &pd), ("thermal_autonomous", &au)] {
        let check = Check {
            name: name.into(),
            pass: d.relative_error() < 0.15,
            value: d.relative_error(),
            threshold: 0.15,
            detail: format!("gamma {:.4} vs {:.4}", d.gamma, d.predicted),
        };
        out.push((check, format!("validate_{name}.csv"), thermal_table(&d.times, &d.parity, d.gamma, d.predicted)));
    }
    Ok(out)
}

pub fn run_suite(scale: Scale, seed: u64) -> Result<Suite> {
    let mut checks = vec![conjugation()?];
    let mut tables = Vec::new();
    let (c, t) = elimination(scale)?;
    checks.push(c);
    tables.push(("validate_elimination.csv".to_string(), t));
    for (c, name, t) in thermal(scale, seed)? {
        checks.push(c);
        tables.push((name, t));
    }
    Ok(Suite { checks, tables })
}
