//! Figure-reproduction presets. Each preset expands into independent tasks,
//! one CSV per task.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use catgates::dynamics::{analytic_buffer_trajectory, evolve, linspace, EvolveOptions};
use catgates::flat::{solve_flat_drive, FlatDriveProblem};
use catgates::gates::{build, Design, DriveProfile, GateModel, GateSpec, Rates};
use catgates::metrics::{bit_error, cnot_error_probabilities, gamma_z_fit, phase_error, rabi_trace, zeno_cnot_control_error, zeno_phase_error, BitInvariant};
use catgates::noise::{apply_noise_to_gate, NoiseParams};
use catgates::ode::Tolerances;
use catgates::stochastic::{jump_probability, no_jump_evolve};
use catgates::{Complex64, Logical, Operator};
use clap::ValueEnum;
use serde_json::json;

use crate::run::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }

    fn pick<T>(self, desk: T, paper: T) -> T {
        match self {
            Scale::Desk => desk,
            Scale::Paper => paper,
        }
    }

    /// Cat size of the fixed-|α|² panels.
    fn alpha2(self) -> f64 {
        self.pick(4.0, 8.0)
    }
}

pub type Job = Box<dyn Fn() -> Result<Table> + Send + Sync>;

pub struct Task {
    pub file: String,
    pub parameters: serde_json::Value,
    pub job: Job,
}

fn task(file: &str, parameters: serde_json::Value, job: impl Fn() -> Result<Table> + Send + Sync + 'static) -> Task {
    Task { file: file.to_string(), parameters, job: Box::new(job) }
}

pub const FIGURES: &[(&str, &str)] = &[
    ("fig1b", "buffer and cat displacement during a Zeno Z(pi), with analytic overlay"),
    ("fig2b", "Z-axis Rabi oscillations: Zeno average and ideal-detector no-click trajectory"),
    ("fig2c", "probability of at least one click during a Z(pi) gate vs gate time"),
    ("fig3", "parity through a Z(pi) gate and reconvergence, with and without detector"),
    ("fig4", "p_Z vs gate time, Zeno and photodetection with gaussian drive"),
    ("fig5", "p_Z vs detector inefficiency 1-eta"),
    ("fig6", "autonomous feedback vs Zeno: p_Z and p_X vs T and |alpha|^2"),
    ("fig7", "autonomous feedback vs Zeno CNOT: control and target phase errors"),
    ("fig8", "flat drive profiles and p_Z vs T and |alpha|^2 for each order"),
    ("fig9", "flat-drive CNOT control phase errors"),
    ("fig10", "discrete-jump Z(pi): p_Z(t) and errors vs |alpha|^2"),
    ("fig10c", "discrete-jump exponential rate gamma_Z vs kappa_Z/kappa_2"),
    ("fig11", "discrete-jump Z(pi) with ancilla decay"),
    ("fig12", "discrete Z(pi/3): qubit vs qutrit ancilla"),
    ("fig13", "p_Z(T) of every design under the reference noise model"),
    ("fig14", "optimal feedback angle after a click and no-click buffer population"),
];

pub fn tasks(id: &str, scale: Scale) -> Result<Vec<Task>> {
    Ok(match id {
        "fig1b" => fig1b(scale),
        "fig2b" => fig2b(scale),
        "fig2c" => fig2c(scale),
        "fig3" => fig3(scale),
        "fig4" => fig4(scale),
        "fig5" => fig5(scale),
        "fig6" => fig6(scale),
        "fig7" => fig7(scale),
        "fig8" => fig8(scale),
        "fig9" => fig9(scale),
        "fig10" => fig10(scale),
        "fig10c" => fig10c(scale),
        "fig11" => fig11(scale),
        "fig12" => fig12(scale),
        "fig13" => fig13(scale),
        "fig14" => fig14(scale),
        other => bail!("unknown figure id `{other}` (see list-figures)"),
    })
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn cat_dim(a2: f64) -> usize {
    (4.0 * a2 + 4.0).ceil() as usize
}

fn buffer_dim(a2: f64) -> usize {
    if a2 > 5.0 {
        8
    } else {
        6
    }
}

fn zeno_rates() -> Rates {
    Rates { g2: Some(1.0), kappa_b: Some(8.0), ..Rates::default() }
}

fn two_mode(design: Design, a2: f64, t: f64) -> GateSpec {
    GateSpec::new(design, PI, t, a2.sqrt()).with_rates(zeno_rates()).with_dim("a", cat_dim(a2)).with_dim("b", buffer_dim(a2))
}

fn zeno(a2: f64, t: f64) -> GateSpec {
    two_mode(Design::StandardZeno, a2, t)
}

fn photodetection(a2: f64, t: f64, eta: f64) -> GateSpec {
    two_mode(Design::Photodetection, a2, t).with_eta(eta)
}

/// κ_ab|α|² = 8g₂, the same effective two-photon rate as κ_b = 8g₂.
fn autonomous(a2: f64, t: f64) -> GateSpec {
    two_mode(Design::AutonomousFeedback, a2, t).with_rates(Rates { g2: Some(1.0), kappa_ab: Some(8.0 / a2), ..Rates::default() })
}

/// Discrete designs with κ₂ = 4g₂²/κ_b = 1.
fn discrete(design: Design, a2: f64, theta: f64, t: f64, kappa_z: f64, kappa_q: f64) -> GateSpec {
    let rates = Rates { g2: Some(1.0), kappa_b: Some(4.0), kappa_z: Some(kappa_z), kappa_q: Some(kappa_q), ..Rates::default() };
    GateSpec::new(design, theta, t, a2.sqrt()).with_rates(rates)
}

fn gate_errors(gate: &GateModel, reconverge: bool) -> Result<(f64, Option<f64>)> {
    let r = gate.run(&gate.initial(Logical::Plus)?, 2, tol())?;
    let at_t = phase_error(&r.final_state, &gate.cat, &gate.code, gate.spec.theta, gate.rotation_sign, Logical::Plus)?.p_z;
    if !reconverge {
        return Ok((at_t, None));
    }
    let rc = gate.reconverge(&r.final_state, 1e-6, 40.0, tol())?;
    let after = phase_error(&rc.result.final_state, &gate.cat, &gate.code, gate.spec.theta, gate.rotation_sign, Logical::Plus)?.p_z;
    Ok((at_t, Some(after)))
}

fn bit_errors(gate: &GateModel) -> Result<(f64, f64)> {
    let inv = BitInvariant::new(gate.code.alpha.re, gate.code.dim())?;
    let r = gate.run(&gate.initial(Logical::Zero)?, 2, tol())?;
    let at_t = bit_error(&r.final_state, &gate.cat, &inv, Logical::Zero)?;
    let rc = gate.reconverge(&r.final_state, 1e-6, 40.0, tol())?;
    Ok((at_t, bit_error(&rc.result.final_state, &gate.cat, &inv, Logical::Zero)?))
}

fn cnot_errors(gate: &GateModel) -> Result<(f64, f64, f64)> {
    let init = gate.initial_pair(Logical::Plus, Logical::Plus)?;
    let r = gate.run(&init, 2, tol())?;
    let e = |label: &str| r.series(label).map(|s| s.last().unwrap().re);
    let (pc, pt, pct) = (e("parity").unwrap(), e("parity_t").unwrap(), e("parity_ct").unwrap());
    Ok(cnot_error_probabilities(pc, pt, pct))
}

fn fig1b(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let t_gate = 10.0;
    let n = scale.pick(61, 121);
    vec![task("fig1b.csv", json!({"alpha2": a2, "kappa_b": 8.0, "gate_time": t_gate}), move || {
        let spec = zeno(a2, t_gate);
        let gate = build(&spec)?;
        let grid = linspace(0.0, t_gate + 5.0, n);
        let obs = vec![("a".to_string(), Operator::a(gate.space(), "a")?), ("b".to_string(), Operator::a(gate.space(), "b")?)];
        let drive = spec.drive_coefficient(PI / (4.0 * spec.alpha));
        let mut cols = vec![("time", grid.clone())];
        let mut names = Vec::new();
        for (which, sigma, tag) in [(Logical::Zero, 1.0, "0"), (Logical::One, -1.0, "1")] {
            let r = evolve(&gate.model, &gate.initial(which)?, &grid, &obs, &EvolveOptions::default())?;
            let (a_ana, b_ana) = analytic_buffer_trajectory(1.0, 8.0, spec.alpha, &drive, &grid, sigma)?;
            let re = |v: &[Complex64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
            let im = |v: &[Complex64]| v.iter().map(|z| z.im).collect::<Vec<_>>();
            names.push((format!("re_b_{tag}"), re(r.series("b").unwrap())));
            names.push((format!("re_b_analytic_{tag}"), re(&b_ana)));
            names.push((format!("im_a_{tag}"), im(r.series("a").unwrap())));
            names.push((format!("im_a_analytic_{tag}"), im(&a_ana)));
        }
        cols.extend(names.iter().map(|(n, v)| (n.as_str(), v.clone())));
        Ok(Table::from_columns(cols))
    })]
}

fn fig2b(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let t_max = scale.pick(10.0, 20.0);
    let n = scale.pick(201, 401);
    vec![task("fig2b.csv", json!({"alpha2": a2, "kappa_b": 8.0, "omega_z": PI, "t_max": t_max}), move || {
        let zeno = rabi_trace(&zeno(a2, t_max), PI, t_max, n, false, tol())?;
        let pd = rabi_trace(&photodetection(a2, t_max, 1.0), PI, t_max, n, true, tol())?;
        Ok(Table::from_columns(vec![
            ("time", zeno.times.clone()),
            ("parity_eta0", zeno.parity),
            ("parity_eta1_no_click", pd.parity),
            ("survival_eta1", pd.survival.unwrap_or_default()),
        ]))
    })]
}

fn fig2c(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let times: Vec<f64> = scale.pick(vec![1.0, 2.0, 4.0, 8.0, 16.0], vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
    vec![task("fig2c.csv", json!({"alpha2": a2, "kappa_b": 8.0, "eta": 1.0}), move || {
        let mut p = Vec::new();
        for &t in &times {
            let gate = build(&photodetection(a2, t, 1.0))?;
            p.push(jump_probability(&gate.model, &gate.channels, &gate.initial(Logical::Plus)?, t, &tol())?);
        }
        Ok(Table::from_columns(vec![("gate_time", times.clone()), ("p_jump", p)]))
    })]
}

fn fig3(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let t_gate = 4.0;
    vec![task("fig3.csv", json!({"alpha2": a2, "kappa_b": 8.0, "gate_time": t_gate}), move || {
        let grid = linspace(0.0, t_gate + 6.0, 101);
        let z = build(&zeno(a2, t_gate))?;
        let obs = vec![("parity".to_string(), z.parity()?)];
        let avg = evolve(&z.model, &z.initial(Logical::Plus)?, &grid, &obs, &EvolveOptions::default())?;
        let pd = build(&photodetection(a2, t_gate, 1.0))?;
        let nj = no_jump_evolve(&pd.model, &pd.channels, &pd.initial(Logical::Plus)?, &grid, &obs, &tol())?;
        let p0 = zeno_phase_error(PI, a2, z.spec.kappa_2(), t_gate);
        Ok(Table::from_columns(vec![
            ("time", grid.clone()),
            ("parity_eta0", avg.real_series("parity").unwrap()),
            ("parity_eta1_no_click", nj.series("parity").unwrap().iter().map(|z| z.re).collect()),
            ("parity_formula", vec![-(1.0 - 2.0 * p0); grid.len()]),
        ]))
    })]
}

fn fig4(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let times: Vec<f64> = scale.pick(vec![2.0, 4.0, 8.0, 16.0], vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
    vec![task("fig4.csv", json!({"alpha2": a2, "kappa_b": 8.0, "eta": 1.0, "drive_profile": "gaussian"}), move || {
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 3];
        for &t in &times {
            let mut z = zeno(a2, t);
            z.drive_profile = DriveProfile::Gaussian;
            let mut pd = photodetection(a2, t, 1.0);
            pd.drive_profile = DriveProfile::Gaussian;
            cols[0].push(gate_errors(&build(&z)?, false)?.0);
            cols[1].push(gate_errors(&build(&pd)?, false)?.0);
            cols[2].push(zeno_phase_error(PI, a2, z.kappa_2(), t));
        }
        let [a, b, c] = <[Vec<f64>; 3]>::try_from(cols).unwrap();
        Ok(Table::from_columns(vec![("gate_time", times.clone()), ("p_Z_zeno", a), ("p_Z_photodetection", b), ("p_Z_formula", c)]))
    })]
}

fn fig5(scale: Scale) -> Vec<Task> {
    let sizes: Vec<f64> = scale.pick(vec![4.0], vec![4.0, 6.0, 8.0]);
    let etas = [0.0, 0.5, 0.9, 0.99, 1.0];
    sizes
        .into_iter()
        .map(|a2| {
            task(&format!("fig5_a2_{a2}.csv"), json!({"alpha2": a2, "kappa_b": 8.0, "gate_time": 4.0}), move || {
                let mut p = Vec::new();
                for &eta in &etas {
                    p.push(gate_errors(&build(&photodetection(a2, 4.0, eta))?, false)?.0);
                }
                let p0 = zeno_phase_error(PI, a2, 0.5, 4.0);
                Ok(Table::from_columns(vec![
                    ("one_minus_eta", etas.iter().map(|e| 1.0 - e).collect()),
                    ("p_Z", p),
                    ("p_Z_bound", etas.iter().map(|e| (1.0 - e) * p0).collect()),
                ]))
            })
        })
        .collect()
}

fn fig6_row(a2: f64, t: f64) -> Result<Vec<f64>> {
    let z = build(&zeno(a2, t))?;
    let a = build(&autonomous(a2, t))?;
    let (zt, zinf) = gate_errors(&z, true)?;
    let (at, ainf) = gate_errors(&a, true)?;
    let (zxt, zxinf) = bit_errors(&z)?;
    let (axt, axinf) = bit_errors(&a)?;
    Ok(vec![zt, zinf.unwrap(), at, ainf.unwrap(), zxt, zxinf, axt, axinf, zeno_phase_error(PI, a2, 0.5, t)])
}

const FIG6_COLUMNS: [&str; 9] =
    ["p_Z_zeno", "p_Z_zeno_reconv", "p_Z_auto", "p_Z_auto_reconv", "p_X_zeno", "p_X_zeno_reconv", "p_X_auto", "p_X_auto_reconv", "p_Z_formula"];

fn fig6(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let times: Vec<f64> = scale.pick(vec![2.0, 5.0, 10.0, 20.0], vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0]);
    let sizes: Vec<f64> = scale.pick(vec![2.0, 3.0, 4.0, 5.0], vec![2.0, 4.0, 6.0, 8.0, 10.0]);
    let params = json!({"kappa_b": 8.0, "kappa_ab_times_alpha2": 8.0, "reconvergence_tolerance": 1e-6});
    let header = |first: &'static str| {
        let mut h = vec![first];
        h.extend(FIG6_COLUMNS);
        h
    };
    vec![
        task("fig6_vs_T.csv", json!({"alpha2": a2, "common": params}), move || {
            let mut t = Table::new(&header("gate_time"));
            for &g in &times {
                let mut row = vec![g];
                row.extend(fig6_row(a2, g)?);
                t.push(row);
            }
            Ok(t)
        }),
        task("fig6_vs_alpha2.csv", json!({"gate_time": 10.0, "common": params}), move || {
            let mut t = Table::new(&header("alpha2"));
            for &s in &sizes {
                let mut row = vec![s];
                row.extend(fig6_row(s, 10.0)?);
                t.push(row);
            }
            Ok(t)
        }),
    ]
}

fn cnot_spec(design: Design, a2: f64, t: f64) -> GateSpec {
    let d = cat_dim(a2).min(16);
    let rates = match design {
        Design::CnotAutonomous => Rates { g2: Some(1.0), kappa_ab: Some(8.0 / a2), ..Rates::default() },
        _ => zeno_rates(),
    };
    GateSpec::new(design, PI, t, a2.sqrt()).with_rates(rates).with_dim("c", d).with_dim("t", d).with_dim("b", 4)
}

fn fig7(scale: Scale) -> Vec<Task> {
    let a2 = scale.pick(2.0, 4.0);
    let times: Vec<f64> = scale.pick(vec![5.0, 10.0, 20.0], vec![2.0, 5.0, 10.0, 20.0, 50.0]);
    let sizes: Vec<f64> = scale.pick(vec![1.5, 2.0, 2.5], vec![2.0, 3.0, 4.0, 5.0]);
    let cols = ["p_ZC_zeno", "p_ZT_zeno", "p_ZCZT_zeno", "p_ZC_auto", "p_ZT_auto", "p_ZCZT_auto", "p_ZC_formula"];
    let row = |a2: f64, t: f64| -> Result<Vec<f64>> {
        let z = cnot_errors(&build(&cnot_spec(Design::CnotZeno, a2, t))?)?;
        let a = cnot_errors(&build(&cnot_spec(Design::CnotAutonomous, a2, t))?)?;
        Ok(vec![z.0, z.1, z.2, a.0, a.1, a.2, zeno_cnot_control_error(a2, 0.5, t)])
    };
    let mk = move |first: &'static str| {
        let mut h = vec![first];
        h.extend(cols);
        h
    };
    vec![
        task("fig7_vs_T.csv", json!({"alpha2": a2, "kappa_b": 8.0, "kappa_ab_times_alpha2": 8.0}), move || {
            let mut t = Table::new(&mk("gate_time"));
            for &g in &times {
                let mut r = vec![g];
                r.extend(row(a2, g)?);
                t.push(r);
            }
            Ok(t)
        }),
        task("fig7_vs_alpha2.csv", json!({"gate_time": 10.0, "kappa_b": 8.0, "kappa_ab_times_alpha2": 8.0}), move || {
            let mut t = Table::new(&mk("alpha2"));
            for &s in &sizes {
                let mut r = vec![s];
                r.extend(row(s, 10.0)?);
                t.push(r);
            }
            Ok(t)
        }),
    ]
}

fn flat(order: usize, a2: f64, t: f64) -> GateSpec {
    GateSpec::new(Design::FlatHamiltonian { order }, PI, t, a2.sqrt()).with_rates(zeno_rates()).eliminated(true)
}

fn fig8(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let orders: Vec<usize> = scale.pick(vec![0, 1, 2], vec![0, 1, 2, 3, 4]);
    let times: Vec<f64> = scale.pick(vec![2.0, 5.0, 10.0, 20.0], vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0]);
    let sizes: Vec<f64> = scale.pick(vec![4.0, 6.0, 8.0], vec![4.0, 6.0, 8.0, 10.0]);
    let names: Vec<String> = orders.iter().map(|n| format!("p_Z_N{n}")).collect();
    let (o1, o2, o3) = (orders.clone(), orders.clone(), orders);
    let (n2, n3) = (names.clone(), names);
    let sweep = move |orders: &[usize], names: &[String], first: &str, xs: &[f64], spec: &dyn Fn(usize, f64) -> GateSpec| -> Result<Table> {
        let mut h = vec![first];
        h.extend(names.iter().map(|s| s.as_str()));
        let mut t = Table::new(&h);
        for &x in xs {
            let mut row = vec![x];
            for &n in orders {
                row.push(gate_errors(&build(&spec(n, x))?, false)?.0);
            }
            t.push(row);
        }
        Ok(t)
    };
    vec![
        task("fig8a.csv", json!({"alpha2": 8.0, "orders": o1}), move || {
            let alpha = 8f64.sqrt();
            let xs = linspace(-8.0, 8.0, 161);
            let mut cols = vec![("x".to_string(), xs.clone())];
            for &n in &o1 {
                let sol = solve_flat_drive(&FlatDriveProblem::standard(n, alpha, PI, 10.0))?;
                let scale = sol.profile(2.0 * alpha);
                cols.push((format!("f_N{n}"), xs.iter().map(|&x| sol.profile(x) / scale).collect()));
            }
            Ok(Table::from_columns(cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect()))
        }),
        task("fig8b.csv", json!({"alpha2": a2, "kappa_2": 0.5, "model": "eliminated"}), move || sweep(&o2, &n2, "gate_time", &times, &|n, t| flat(n, a2, t))),
        task("fig8c.csv", json!({"gate_time": 10.0, "kappa_2": 0.5, "model": "eliminated"}), move || sweep(&o3, &n3, "alpha2", &sizes, &|n, s| flat(n, s, 10.0))),
    ]
}

fn fig9(scale: Scale) -> Vec<Task> {
    let a2 = scale.pick(2.0, 4.0);
    let orders: Vec<usize> = scale.pick(vec![0, 1], vec![0, 1, 2]);
    let times: Vec<f64> = scale.pick(vec![5.0, 10.0, 20.0], vec![2.0, 5.0, 10.0, 20.0, 50.0]);
    let sizes: Vec<f64> = scale.pick(vec![2.0, 3.0, 4.0], vec![2.0, 4.0, 6.0, 8.0]);
    let spec = |n: usize, a2: f64, t: f64| {
        let d = cat_dim(a2) + 4 * n;
        GateSpec::new(Design::CnotFlat { order: n }, PI, t, a2.sqrt()).with_rates(zeno_rates()).eliminated(true).with_dim("c", d).with_dim("t", d)
    };
    let run = move |orders: Vec<usize>, first: &'static str, xs: Vec<f64>, at: Box<dyn Fn(usize, f64) -> GateSpec + Send + Sync>| -> Job {
        Box::new(move || {
            let names: Vec<String> = orders.iter().map(|n| format!("p_ZC_N{n}")).collect();
            let mut h = vec![first];
            h.extend(names.iter().map(|s| s.as_str()));
            let mut t = Table::new(&h);
            for &x in &xs {
                let mut row = vec![x];
                for &n in &orders {
                    row.push(cnot_errors(&build(&at(n, x))?)?.0);
                }
                t.push(row);
            }
            Ok(t)
        })
    };
    vec![
        Task {
            file: "fig9_vs_T.csv".into(),
            parameters: json!({"alpha2": a2, "kappa_2": 0.5, "model": "eliminated"}),
            job: run(orders.clone(), "gate_time", times, Box::new(move |n, t| spec(n, a2, t))),
        },
        Task {
            file: "fig9_vs_alpha2.csv".into(),
            parameters: json!({"gate_time": 10.0, "kappa_2": 0.5, "model": "eliminated"}),
            job: run(orders, "alpha2", sizes, Box::new(move |n, s| spec(n, s, 10.0))),
        },
    ]
}

/// Probability of even cat parity, p_Z of a Z(π) started in |+⟩.
fn even_population(gate: &GateModel, grid: &[f64], tol: Tolerances) -> Result<Vec<f64>> {
    let even = gate.parity()?.add_identity(Complex64::new(1.0, 0.0)).scale_re(0.5);
    let r = evolve(&gate.model, &gate.initial(Logical::Plus)?, grid, &[("even".into(), even)], &EvolveOptions { tol, leakage: None })?;
    Ok(r.real_series("even").unwrap())
}

fn fig10(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let rates = [0.1, 0.3, 1.0, 3.0];
    let sizes: Vec<f64> = scale.pick(vec![2.0, 4.0, 6.0], vec![2.0, 4.0, 6.0, 8.0, 10.0]);
    vec![
        task("fig10a.csv", json!({"alpha2": a2, "kappa_2": 1.0, "kappa_Z": rates}), move || {
            let grid = linspace(0.0, 10.0, 101);
            let mut cols = vec![("time".to_string(), grid.clone())];
            for &kz in &rates {
                let gate = build(&discrete(Design::DiscreteQubit, a2, PI, 10.0, kz, 0.0))?;
                cols.push((format!("p_Z_kZ_{kz}"), even_population(&gate, &grid, tol())?));
                cols.push((format!("formula_kZ_{kz}"), grid.iter().map(|t| (-a2 * kz * t).exp()).collect()));
            }
            Ok(Table::from_columns(cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect()))
        }),
        task("fig10b.csv", json!({"gate_time": 10.0, "kappa_2": 1.0, "kappa_Z": rates}), move || {
            let mut cols = vec![("alpha2".to_string(), sizes.clone())];
            for &kz in &rates {
                let mut pz = Vec::new();
                let mut px = Vec::new();
                for &s in &sizes {
                    let gate = build(&discrete(Design::DiscreteQubit, s, PI, 10.0, kz, 0.0))?;
                    pz.push(*even_population(&gate, &[0.0, 10.0], tol())?.last().unwrap());
                    let inv = BitInvariant::new(s.sqrt(), gate.code.dim())?;
                    let r = evolve(&gate.model, &gate.initial(Logical::Zero)?, &[0.0, 10.0], &[], &EvolveOptions::default())?;
                    px.push(bit_error(&r.final_state, &gate.cat, &inv, Logical::Zero)?);
                }
                cols.push((format!("p_Z_kZ_{kz}"), pz));
                cols.push((format!("p_X_kZ_{kz}"), px));
            }
            Ok(Table::from_columns(cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect()))
        }),
    ]
}

/// γ_Z from a log-linear fit of p_Z(t), after the transient and above the
/// integration floor.
pub fn discrete_gamma_z(a2: f64, kappa_z: f64) -> Result<f64> {
    let fine = Tolerances { rtol: 1e-10, atol: 1e-18, ..Tolerances::default() };
    let t_max = 2.0 + 16.0 / (a2 * kappa_z);
    let grid = linspace(0.0, t_max, 161);
    let gate = build(&discrete(Design::DiscreteQubit, a2, PI, t_max, kappa_z, 0.0))?;
    let p = even_population(&gate, &grid, fine)?;
    let end = p.iter().position(|&v| v < 1e-10).unwrap_or(p.len());
    let start = p.iter().position(|&v| v < 1e-2).map(|i| grid[i]).unwrap_or(0.0).min(2.0);
    Ok(gamma_z_fit(&grid[..end], &p[..end], start)?.gamma)
}

fn fig10c(scale: Scale) -> Vec<Task> {
    let sizes: Vec<f64> = scale.pick(vec![2.0, 4.0], vec![2.0, 4.0, 8.0]);
    let ratios = vec![0.3, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0, 5.6, 8.0];
    vec![task("fig10c.csv", json!({"kappa_2": 1.0, "alpha2": sizes}), move || {
        let mut cols = vec![("kappa_Z".to_string(), ratios.clone())];
        for &s in &sizes {
            cols.push((format!("gamma_Z_a2_{s}"), ratios.iter().map(|&k| discrete_gamma_z(s, k)).collect::<Result<_>>()?));
            cols.push((format!("formula_a2_{s}"), ratios.iter().map(|k| s * k).collect()));
        }
        Ok(Table::from_columns(cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect()))
    })]
}

fn fig11(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let kqs = [1e-3, 1e-2, 1e-1];
    vec![task("fig11.csv", json!({"alpha2": a2, "kappa_2": 1.0, "kappa_Z": 1.0, "kappa_q": kqs}), move || {
        let grid = linspace(0.0, 10.0, 101);
        let mut cols = vec![("time".to_string(), grid.clone())];
        for &kq in &kqs {
            let gate = build(&discrete(Design::DiscreteQubit, a2, PI, 10.0, 1.0, kq))?;
            cols.push((format!("p_Z_kq_{kq}"), even_population(&gate, &grid, tol())?));
            cols.push((format!("formula_kq_{kq}"), grid.iter().map(|t| kq * t + (-a2 * t).exp()).collect()));
        }
        Ok(Table::from_columns(cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect()))
    })]
}

fn fig12(scale: Scale) -> Vec<Task> {
    let a2 = 4.0;
    let rates = [0.03, 0.1, 0.3];
    let n = scale.pick(31, 61);
    let theta = PI / 3.0;
    vec![task("fig12.csv", json!({"alpha2": a2, "kappa_2": 1.0, "theta": theta, "kappa_Z": rates}), move || {
        let grid = linspace(0.0, 60.0, n);
        let mut cols = vec![("time".to_string(), grid.clone())];
        for &kz in &rates {
            for (design, tag) in [(Design::DiscreteQubit, "qubit"), (Design::DiscreteQutrit, "qutrit")] {
                let gate = build(&discrete(design, a2, theta, 60.0, kz, 0.0))?;
                let mut state = gate.initial(Logical::Plus)?;
                let mut p = vec![phase_error(&state, &gate.cat, &gate.code, theta, gate.rotation_sign, Logical::Plus)?.p_z];
                for w in grid.windows(2) {
                    state = evolve(&gate.model, &state, w, &[], &EvolveOptions::default())?.final_state;
                    p.push(phase_error(&state, &gate.cat, &gate.code, theta, gate.rotation_sign, Logical::Plus)?.p_z);
                }
                cols.push((format!("p_Z_{tag}_kZ_{kz}"), p));
            }
            cols.push((format!("formula_kZ_{kz}"), grid.iter().map(|t| (-a2 * kz * t).exp()).collect()));
        }
        Ok(Table::from_columns(cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect()))
    })]
}

/// p_Z(T) of one design under the reference noise model at |α|² = 4.
pub fn noisy_gate_error(design: &str, t: f64) -> Result<f64> {
    let noise = NoiseParams::reference();
    let two = |spec: GateSpec| -> Result<f64> { Ok(gate_errors(&apply_noise_to_gate(&build(&spec.with_dim("a", 20).with_dim("b", 6))?, &noise)?, false)?.0) };
    match design {
        "zeno" => two(zeno(4.0, t)),
        "photodetection" => two(photodetection(4.0, t, 0.9)),
        "autonomous" => two(two_mode(Design::AutonomousFeedback, 4.0, t).with_rates(Rates { g2: Some(1.0), kappa_ab: Some(2.0), ..Rates::default() })),
        "flat" => two(two_mode(Design::FlatHamiltonian { order: 1 }, 4.0, t)),
        "discrete" => {
            // buffer-free model: cat-mode noise only
            let gate = build(&discrete(Design::DiscreteQubit, 4.0, PI, t, 0.1, 0.0))?;
            let gate = apply_noise_to_gate(&gate, &NoiseParams { k_b: 0.0, chi_ab: 0.0, ..noise })?;
            Ok(*even_population(&gate, &[0.0, t], tol())?.last().unwrap())
        }
        other => bail!("unknown design `{other}`"),
    }
}

pub const FIG13_DESIGNS: [&str; 5] = ["zeno", "photodetection", "autonomous", "flat", "discrete"];

fn fig13(scale: Scale) -> Vec<Task> {
    let times: Vec<f64> = scale.pick(vec![2.0, 5.0, 12.0, 30.0, 75.0, 200.0], vec![1.0, 2.0, 3.5, 5.0, 8.0, 12.0, 20.0, 30.0, 50.0, 75.0, 120.0, 200.0]);
    FIG13_DESIGNS
        .iter()
        .map(|&d| {
            let times = times.clone();
            task(&format!("fig13_{d}.csv"), json!({"alpha2": 4.0, "design": d, "noise": NoiseParams::reference()}), move || {
                let p = times.iter().map(|&t| noisy_gate_error(d, t)).collect::<Result<Vec<_>>>()?;
                Ok(Table::from_columns(vec![("gate_time", times.clone()), ("p_Z", p)]))
            })
        })
        .collect()
}

fn fig14(scale: Scale) -> Vec<Task> {
    let a2 = scale.alpha2();
    let times: Vec<f64> = vec![2.0, 4.0, 10.0];
    let n = scale.pick(21, 41);
    times
        .into_iter()
        .map(|t_gate| {
            task(&format!("fig14_T{t_gate}.csv"), json!({"alpha2": a2, "kappa_b": 8.0, "gate_time": t_gate}), move || {
                let gate = build(&photodetection(a2, t_gate, 1.0))?;
                // click times strictly inside the drive window
                let grid: Vec<f64> = (1..=n).map(|k| t_gate * k as f64 / (n + 1) as f64).collect();
                let mut delta = Vec::new();
                let mut fid = Vec::new();
                for &tj in &grid {
                    let fb = gate.optimal_feedback_angle(tj, 2.0, tol())?;
                    delta.push(fb.delta);
                    fid.push(fb.fidelity);
                }
                let nb = vec![("n_b".to_string(), Operator::n(gate.space(), "b")?)];
                let mut full = vec![0.0];
                full.extend(&grid);
                let nj = no_jump_evolve(&gate.model, &gate.channels, &gate.initial(Logical::Plus)?, &full, &nb, &tol())?;
                let pop: Vec<f64> = nj.series("n_b").unwrap()[1..].iter().map(|z| z.re).collect();
                Ok(Table::from_columns(vec![("t_J", grid.clone()), ("delta", delta), ("fidelity", fid), ("n_b_no_click", pop)]))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_figure_expands() {
        for (id, _) in FIGURES {
            for scale in [Scale::Desk, Scale::Paper] {
                let t = tasks(id, scale).unwrap();
                assert!(!t.is_empty(), "{id}");
                let mut files: Vec<_> = t.iter().map(|t| t.file.clone()).collect();
                files.sort();
                files.dedup();
                assert_eq!(files.len(), t.len(), "{id}: duplicate file names");
            }
        }
    }

    #[test]
    fn unknown_figure_rejected() {
        assert!(tasks("fig99", Scale::Desk).is_err());
    }
}
