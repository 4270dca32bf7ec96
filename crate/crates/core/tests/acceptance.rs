//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! `ACCEPTANCE_ONLY=1,4,10` restricts the run; `ACCEPTANCE_STRICT=1` turns
//! failures into a nonzero exit status.

use std::f64::consts::PI;
use std::time::Instant;

use catgates::dynamics::{analytic_buffer_trajectory, evolve, linspace, EvolveOptions};
use catgates::flat::{ats_feasibility, gaussian_moments, solve_flat_drive, FlatDriveProblem};
use catgates::gates::{build, Design, GateModel, GateSpec, Rates};
use catgates::metrics::{bit_error, exponential_fit, gamma_z_fit, linear_fit, phase_error, power_law_fit, BitInvariant};
use catgates::noise::{
    apply_noise_to_gate, compare_adiabatic_elimination, phase_conjugation_check, simulate_thermal_autonomous, simulate_thermal_photodetection,
    NoiseParams, ThermalSetup,
};
use catgates::ode::Tolerances;
use catgates::stochastic::{TrajectoryEnsemble, TrajectoryOptions, Unraveling};
use catgates::{Complex64, Logical, Operator, QuantumState};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn rates_b(kappa_b: f64) -> Rates {
    Rates { g2: Some(1.0), kappa_b: Some(kappa_b), ..Rates::default() }
}

fn zeno(alpha2: f64, t: f64, dims: (usize, usize)) -> GateSpec {
    GateSpec::new(Design::StandardZeno, PI, t, alpha2.sqrt()).with_rates(rates_b(8.0)).with_dim("a", dims.0).with_dim("b", dims.1)
}

/// p_Z of a Z(π) gate from |+_L⟩ at the end of the drive window.
fn gate_pz(gate: &GateModel, tol: Tolerances) -> Result<(f64, QuantumState), Box<dyn std::error::Error>> {
    let r = gate.run(&gate.initial(Logical::Plus)?, 2, tol)?;
    let pe = phase_error(&r.final_state, &gate.cat, &gate.code, gate.spec.theta, gate.rotation_sign, Logical::Plus)?;
    Ok((pe.p_z, r.final_state))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_buffer_dynamics() -> Outcome {
    let alpha2: f64 = 8.0;
    let alpha = alpha2.sqrt();
    let t_gate = 10.0;
    let spec = zeno(alpha2, t_gate, (36, 8));
    let gate = build(&spec)?;
    let grid = linspace(0.0, t_gate + 4.0, 57);
    let b = Operator::a(gate.space(), "b")?;
    let eps = PI / (4.0 * alpha * t_gate);
    let nu = 2.0 * alpha;
    let b_eq = eps / nu;
    let mut worst = 0.0f64;
    let mut worst_eq = 0.0f64;
    for (which, sigma) in [(Logical::Zero, 1.0), (Logical::One, -1.0)] {
        let r = evolve(&gate.model, &gate.initial(which)?, &grid, &[("b".into(), b.clone())], &EvolveOptions::default())?;
        let sim = r.series("b").unwrap();
        let drive = spec.drive_coefficient(PI / (4.0 * alpha));
        let (_, ana) = analytic_buffer_trajectory(1.0, 8.0, alpha, &drive, &grid, sigma)?;
        for ((t, s), a) in grid.iter().zip(sim).zip(&ana) {
            if *t > 0.5 {
                worst = worst.max((s.re - a.re).abs() / b_eq);
            }
        }
        let i_end = grid.iter().position(|&t| t >= t_gate).unwrap() - 1;
        worst_eq = worst_eq.max(rel(sim[i_end].re, -sigma * b_eq));
    }
    Ok((worst < 0.05 && worst_eq < 0.03, format!("max |Δ Re b|/|b_eq| = {worst:.4}, equilibrium deviation = {worst_eq:.4}")))
}

fn c2_zeno_formula() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for t in [4.0, 10.0, 20.0] {
        let (pz, _) = gate_pz(&build(&zeno(8.0, t, (36, 8)))?, Tolerances::default())?;
        let predicted = PI * PI * 8.0 / (16.0 * 64.0 * 4.0 * t);
        ok &= rel(pz, predicted) < 0.25;
        detail.push(format!("T={t}: {pz:.3e} vs {predicted:.3e}"));
    }
    Ok((ok, detail.join("; ")))
}

fn c3_eta_scaling() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (alpha2, dim_a) in [(4.0f64, 24usize), (8.0, 36)] {
        let pz = |eta: f64| -> Result<f64, Box<dyn std::error::Error>> {
            let spec = GateSpec::new(Design::Photodetection, PI, 4.0, alpha2.sqrt())
                .with_rates(rates_b(8.0))
                .with_eta(eta)
                .with_dim("a", dim_a)
                .with_dim("b", 8);
            Ok(gate_pz(&build(&spec)?, Tolerances::default())?.0)
        };
        // the η → 1 value is the saturation floor; the slope is fitted to the excess
        let floor = pz(1.0)?;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for eta in [0.0, 0.5, 0.9, 0.99] {
            x.push(1.0 - eta);
            y.push(pz(eta)? - floor);
        }
        let fit = power_law_fit(&x, &y)?;
        ok &= (fit.slope - 1.0).abs() < 0.15;
        detail.push(format!("|α|²={alpha2}: slope {:.3} (floor {floor:.2e})", fit.slope));
    }
    Ok((ok, detail.join("; ")))
}

fn c4_trajectory_equivalence() -> Outcome {
    let spec = GateSpec::new(Design::Photodetection, PI, 4.0, 2.0).with_rates(rates_b(8.0)).with_eta(1.0).with_dim("a", 20).with_dim("b", 6);
    let gate = build(&spec)?;
    let grid = linspace(0.0, 4.0, 9);
    let obs = vec![("parity".to_string(), gate.parity()?)];
    let init = gate.initial(Logical::Plus)?;
    let opts = TrajectoryOptions { tol: Tolerances::default(), unraveling: Unraveling::Ket };
    let ens = TrajectoryEnsemble::run(&gate.model, &gate.channels, &init, &grid, &obs, 2000, 2024, &opts)?;
    let avg = evolve(&gate.averaged_model()?, &init, &grid, &obs, &EvolveOptions::default())?;
    let (mean, se) = ens.mean_of("parity").unwrap();
    let det = avg.real_series("parity").unwrap();
    let last = grid.len() - 1;
    let z_final = (mean[last].re - det[last]).abs() / se[last].max(1e-12);
    let z_max = (1..grid.len()).map(|i| (mean[i].re - det[i]).abs() / se[i].max(1e-12)).fold(0.0, f64::max);
    Ok((z_final < 3.0, format!("final-time deviation {z_final:.2} σ (max over grid {z_max:.2} σ), mean {:.5} vs {:.5}", mean[last].re, det[last])))
}

fn c5_autonomous_gain() -> Outcome {
    let tol = Tolerances::default();
    let alpha2: f64 = 8.0;
    let base = build(&zeno(alpha2, 10.0, (36, 8)))?;
    let (_, base_state) = gate_pz(&base, tol)?;
    let base_rc = base.reconverge(&base_state, 1e-8, 60.0, tol)?;
    let p_base = phase_error(&base_rc.result.final_state, "a", &base.code, PI, 1.0, Logical::Plus)?.p_z;
    let auto_spec = GateSpec::new(Design::AutonomousFeedback, PI, 10.0, alpha2.sqrt())
        .with_rates(Rates { g2: Some(1.0), kappa_ab: Some(8.0 / alpha2), ..Rates::default() })
        .with_dim("a", 36)
        .with_dim("b", 8);
    let auto = build(&auto_spec)?;
    let (_, auto_state) = gate_pz(&auto, tol)?;
    let auto_rc = auto.reconverge(&auto_state, 1e-8, 60.0, tol)?;
    let p_auto = phase_error(&auto_rc.result.final_state, "a", &auto.code, PI, 1.0, Logical::Plus)?.p_z;
    let mu = p_auto / p_base;

    let mut x = Vec::new();
    let mut y = Vec::new();
    for a2 in [2.0f64, 3.0, 4.0, 5.0, 6.0] {
        let spec = GateSpec::new(Design::AutonomousFeedback, PI, 10.0, a2.sqrt())
            .with_rates(Rates { g2: Some(1.0), kappa_ab: Some(8.0 / a2), ..Rates::default() })
            .with_dim("a", 30)
            .with_dim("b", 6);
        let g = build(&spec)?;
        let r = g.run(&g.initial(Logical::Zero)?, 2, tol)?;
        let inv = BitInvariant::new(a2.sqrt(), 30)?;
        x.push(a2);
        y.push(bit_error(&r.final_state, "a", &inv, Logical::Zero)?);
    }
    let slope = exponential_fit(&x, &y)?.slope;
    let ok = (0.01..=0.04).contains(&mu) && rel(slope, -2.0) < 0.2;
    Ok((ok, format!("μ = {mu:.4} ({p_auto:.3e}/{p_base:.3e}); bit-flip slope {slope:.3}")))
}

fn c6_flat_optimizer() -> Outcome {
    let alpha = 8f64.sqrt();
    let sol = solve_flat_drive(&FlatDriveProblem::standard(2, alpha, PI, 10.0))?;
    let quoted = [0.66, -0.055, 0.0021];
    let coeff_ok = sol.coefficients.iter().zip(quoted).all(|(c, q)| rel(*c, q) < 0.05);
    // trapezoid quadrature of x^k against N(2α, 1)
    let moments = gaussian_moments(alpha, 20);
    let (lo, hi, n) = (2.0 * alpha - 16.0, 2.0 * alpha + 16.0, 6400);
    let h = (hi - lo) / n as f64;
    let mut worst = 0.0f64;
    for (k, m) in moments.iter().enumerate() {
        let f = |x: f64| x.powi(k as i32) * (-0.5 * (x - 2.0 * alpha).powi(2)).exp() / (2.0 * PI).sqrt();
        let q = h * ((1..n).map(|i| f(lo + i as f64 * h)).sum::<f64>() + 0.5 * (f(lo) + f(hi)));
        worst = worst.max(rel(*m, q));
    }
    let c = &sol.coefficients;
    Ok((
        coeff_ok && worst < 1e-8,
        format!("c = ({:.4}, {:.4}, {:.6}) vs quoted ({}, {}, {}); moment deviation {worst:.1e}", c[0], c[1], c[2], quoted[0], quoted[1], quoted[2]),
    ))
}

fn c7_flat_scaling() -> Outcome {
    let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Tolerances::default() };
    let mut detail = Vec::new();
    let mut ok = true;
    for order in [1usize, 2] {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for a2 in [4.0f64, 6.0, 8.0, 10.0] {
            let spec = GateSpec::new(Design::FlatHamiltonian { order }, PI, 10.0, a2.sqrt()).with_rates(rates_b(8.0)).eliminated(true);
            x.push(a2.sqrt());
            y.push(gate_pz(&build(&spec)?, tol)?.0);
        }
        // exponent in |α|
        let k = power_law_fit(&x, &y)?.slope;
        let expected = -2.0 * (2.0 + order as f64);
        ok &= rel(k, expected) < 0.15;
        detail.push(format!("N={order}: exponent {k:.3} vs {expected}"));
    }
    Ok((ok, detail.join("; ")))
}

fn discrete(design: Design, a2: f64, kappa_z: f64, kappa_q: f64, theta: f64, t: f64) -> Result<GateModel, Box<dyn std::error::Error>> {
    // κ₂ = 4g₂²/κ_b = 1 sets the unit
    let rates = Rates { g2: Some(1.0), kappa_b: Some(4.0), kappa_z: Some(kappa_z), kappa_q: Some(kappa_q), ..Rates::default() };
    Ok(build(&GateSpec::new(design, theta, t, a2.sqrt()).with_rates(rates))?)
}

/// P(even parity) over a grid, which is p_Z for a Z(π) from |+_L⟩.
fn even_population(gate: &GateModel, grid: &[f64], tol: Tolerances) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    let even = gate.parity()?.add_identity(Complex64::new(1.0, 0.0)).scale_re(0.5);
    let r = evolve(&gate.model, &gate.initial(Logical::Plus)?, grid, &[("even".into(), even)], &EvolveOptions { tol, leakage: None })?;
    Ok(r.real_series("even").unwrap())
}

fn c8_discrete_jump() -> Outcome {
    let mut detail = Vec::new();
    let tol = Tolerances::default();
    // (a) single jump against exp(−|α|²κ_Z t)
    let grid = linspace(0.0, 10.0, 21);
    let pz = even_population(&discrete(Design::DiscreteQubit, 8.0, 0.1, 0.0, PI, 10.0)?, &grid, tol)?;
    let dev = grid.iter().zip(&pz).skip(1).map(|(t, p)| rel(*p, (-0.8 * t).exp())).fold(0.0, f64::max);
    let ok_a = dev < 0.1;
    detail.push(format!("max rel. deviation {dev:.3}"));

    // (b) rate transition: κ_Z/κ₂ where γ_Z falls to half of |α|²κ_Z
    let fine = Tolerances { rtol: 1e-10, atol: 1e-18, ..Tolerances::default() };
    let ratios = [0.3, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0, 5.6, 8.0];
    let mut crossings = Vec::new();
    for a2 in [2.0f64, 4.0, 8.0] {
        let mut eff = Vec::new();
        for &kz in &ratios {
            let t_max = 2.0 + 16.0 / (a2 * kz);
            let grid = linspace(0.0, t_max, 161);
            let p = even_population(&discrete(Design::DiscreteQubit, a2, kz, 0.0, PI, t_max)?, &grid, fine)?;
            // fit once the transient has decayed below 1e-2, above the numerical floor
            let end = p.iter().position(|&v| v < 1e-10).unwrap_or(p.len());
            let start = p.iter().position(|&v| v < 1e-2).map(|i| grid[i]).unwrap_or(0.0).min(2.0);
            eff.push(gamma_z_fit(&grid[..end], &p[..end], start)?.gamma / (a2 * kz));
        }
        let cross = eff
            .windows(2)
            .zip(ratios.windows(2))
            .find(|(e, _)| e[0] >= 0.5 && e[1] < 0.5)
            .map(|(e, r)| {
                let f = (e[0] - 0.5) / (e[0] - e[1]);
                (r[0].ln() + f * (r[1].ln() - r[0].ln())).exp()
            });
        crossings.push(cross);
    }
    let ok_b = match crossings.as_slice() {
        [Some(c2), Some(c4), Some(c8)] => {
            let r1 = c4 / c2;
            let r2 = c8 / c4;
            detail.push(format!("transitions {c2:.3}, {c4:.3}, {c8:.3} (ratios {r1:.3}, {r2:.3} vs √2)"));
            c2 < c4 && c4 < c8 && rel(r1, 2f64.sqrt()) < 0.3 && rel(r2, 2f64.sqrt()) < 0.3
        }
        other => {
            detail.push(format!("transition not bracketed: {other:?}"));
            false
        }
    };

    // (c) ancilla decay: κ_q is the single fitted parameter of the model
    let mut worst = 0.0f64;
    let mut fitted = Vec::new();
    for kq in [1e-3, 1e-2] {
        let grid = linspace(0.0, 10.0, 41);
        let p = even_population(&discrete(Design::DiscreteQubit, 8.0, 1.0, kq, PI, 10.0)?, &grid, tol)?;
        // relative residual r = y − k·x with y = 1 − e/p, x = t/p
        let pts: Vec<(f64, f64)> = grid.iter().zip(&p).skip(1).map(|(t, v)| (t / v, 1.0 - (-8.0 * t).exp() / v)).collect();
        let k = pts.iter().map(|(x, y)| x * y).sum::<f64>() / pts.iter().map(|(x, _)| x * x).sum::<f64>();
        let rms = (pts.iter().map(|(x, y)| (y - k * x).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
        worst = worst.max(rms);
        fitted.push(format!("{k:.3e}/{kq:.0e}"));
    }
    let ok_c = worst < 0.1;
    detail.push(format!("ancilla-decay fit rms residual {worst:.3} (fitted/true κ_q {})", fitted.join(", ")));
    Ok((ok_a && ok_b && ok_c, detail.join("; ")))
}

fn plateau(design: Design, theta: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let gate = discrete(design, 4.0, 0.1, 0.0, theta, 60.0)?;
    let r = evolve(&gate.model, &gate.initial(Logical::Plus)?, &[0.0, 60.0], &[], &EvolveOptions::default())?;
    Ok(phase_error(&r.final_state, "a", &gate.code, theta, gate.rotation_sign, Logical::Plus)?.p_z)
}

fn c9_qutrit() -> Outcome {
    let q3 = plateau(Design::DiscreteQubit, PI / 3.0)?;
    let q6 = plateau(Design::DiscreteQubit, PI / 6.0)?;
    let t3 = plateau(Design::DiscreteQutrit, PI / 3.0)?;
    let ratio = q3 / q6;
    let expected = (PI / 3.0).sin().powi(2) / (PI / 6.0).sin().powi(2);
    let ok = rel(ratio, expected) < 0.3 && t3 * 10.0 <= q3;
    Ok((ok, format!("qubit plateau ratio {ratio:.3} vs {expected:.3}; qutrit {t3:.2e} vs qubit {q3:.2e} ({:.1}×)", q3 / t3)))
}

fn c10_conjugation() -> Outcome {
    let spec = GateSpec::new(Design::StandardZeno, PI, 4.0, 1.0).with_rates(rates_b(8.0)).with_dim("a", 10).with_dim("b", 4);
    let report = phase_conjugation_check(&build(&spec)?.model, 1.0)?;
    Ok((
        report.commutator_norm < 1e-10 && report.involution_defect == 0.0 && report.guaranteed(),
        format!("‖CL − LC‖ = {:.2e}, involution defect {:.1e}", report.commutator_norm, report.involution_defect),
    ))
}

fn c11_elimination() -> Outcome {
    let spec = GateSpec::new(Design::AutonomousFeedback, PI, 20.0, 2.0)
        .with_rates(Rates { g2: Some(1.0), kappa_ab: Some(2.0), ..Rates::default() })
        .with_dim("a", 24)
        .with_dim("b", 6);
    let cmp = compare_adiabatic_elimination(&spec, 41, Tolerances::default())?;
    Ok((cmp.max_deviation < 0.1, format!("max parity deviation {:.4}", cmp.max_deviation)))
}

fn c12_thermal() -> Outcome {
    let tol = Tolerances::default();
    let pd = ThermalSetup { alpha: 2.0, kappa: 8.0, n_th: 0.02, eta: 1.0, dims: (20, 6), duration: 6.0, n_points: 31, fit_start: 1.0 };
    let pd = simulate_thermal_photodetection(&pd, 4000, 11, tol)?;
    let au = ThermalSetup { alpha: 2.0, kappa: 1.0, n_th: 0.02, eta: 1.0, dims: (20, 6), duration: 40.0, n_points: 41, fit_start: 5.0 };
    let au = simulate_thermal_autonomous(&au, tol)?;
    Ok((
        pd.relative_error() < 0.15 && au.relative_error() < 0.15,
        format!("photodetection γ {:.4} vs {:.4}; autonomous γ {:.4} vs {:.4}", pd.gamma, pd.predicted, au.gamma, au.predicted),
    ))
}

fn c13_noise_landscape() -> Outcome {
    let tol = Tolerances::default();
    let noise = NoiseParams::reference();
    let times = [2.0, 5.0, 12.0, 30.0, 75.0, 200.0];
    let slope_expected = 4.0 * noise.kappa_a * (1.0 + 2.0 * noise.n_th_a);
    let two_mode = |design: Design, rates: Rates, eta: Option<f64>, t: f64| -> Result<f64, Box<dyn std::error::Error>> {
        let mut spec = GateSpec::new(design, PI, t, 2.0).with_rates(rates).with_dim("a", 20).with_dim("b", 6);
        if let Some(e) = eta {
            spec = spec.with_eta(e);
        }
        let gate = apply_noise_to_gate(&build(&spec)?, &noise)?;
        Ok(gate_pz(&gate, tol)?.0)
    };
    let mut curves: Vec<(&str, Vec<f64>)> = Vec::new();
    let auto = Rates { g2: Some(1.0), kappa_ab: Some(2.0), ..Rates::default() };
    curves.push(("zeno", times.iter().map(|&t| two_mode(Design::StandardZeno, rates_b(8.0), None, t)).collect::<Result<_, _>>()?));
    curves.push(("photodetection", times.iter().map(|&t| two_mode(Design::Photodetection, rates_b(8.0), Some(0.9), t)).collect::<Result<_, _>>()?));
    curves.push(("autonomous", times.iter().map(|&t| two_mode(Design::AutonomousFeedback, auto.clone(), None, t)).collect::<Result<_, _>>()?));
    curves.push(("flat", times.iter().map(|&t| two_mode(Design::FlatHamiltonian { order: 1 }, rates_b(8.0), None, t)).collect::<Result<_, _>>()?));
    // discrete jump: one run, p_Z read along the way; cat noise only
    let gate = discrete(Design::DiscreteQubit, 4.0, 0.1, 0.0, PI, 200.0)?;
    let gate = apply_noise_to_gate(&gate, &NoiseParams { k_b: 0.0, chi_ab: 0.0, ..noise })?;
    let mut grid = vec![0.0];
    grid.extend(times);
    curves.push(("discrete", even_population(&gate, &grid, tol)?[1..].to_vec()));

    let mut ok = true;
    let mut detail = Vec::new();
    for (name, p) in &curves {
        let imin = p.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        let interior = imin > 0 && imin < p.len() - 1;
        let n = p.len();
        let slope = linear_fit(&times[n - 2..], &p[n - 2..])?.slope;
        let good = interior && rel(slope, slope_expected) < 0.25;
        ok &= good;
        detail.push(format!("{name}: min at T={} slope {:.3e}", times[imin], slope));
    }
    detail.push(format!("expected slope {slope_expected:.3e}"));
    Ok((ok, detail.join("; ")))
}

fn c14_ats() -> Outcome {
    let alpha = 8f64.sqrt();
    let t_gate = 500e-9;
    let sol = solve_flat_drive(&FlatDriveProblem::standard(2, alpha, PI, t_gate))?;
    let ej = 2.0 * PI * 90e9;
    let report = ats_feasibility(ej, 0.1, &[0.01; 3], &sol)?;
    Ok((report.min_ratio >= 10.0, format!("margins {:?}, minimum {:.2}", report.ratios.iter().map(|r| format!("{r:.1}")).collect::<Vec<_>>(), report.min_ratio)))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 14] = [
        (1, "buffer dynamics", c1_buffer_dynamics),
        (2, "Zeno baseline formula", c2_zeno_formula),
        (3, "photodetection η scaling", c3_eta_scaling),
        (4, "trajectory/deterministic equivalence", c4_trajectory_equivalence),
        (5, "autonomous feedback gain", c5_autonomous_gain),
        (6, "flat-drive optimizer", c6_flat_optimizer),
        (7, "flat-drive error scaling", c7_flat_scaling),
        (8, "discrete jump", c8_discrete_jump),
        (9, "qutrit discrete Z(π/3)", c9_qutrit),
        (10, "phase-conjugation symmetry", c10_conjugation),
        (11, "adiabatic elimination", c11_elimination),
        (12, "thermal buffer rates", c12_thermal),
        (13, "noise landscape", c13_noise_landscape),
        (14, "ATS feasibility", c14_ats),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut failures = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("criterion {id:>2} {:<4} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {failures} failing");
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
