//! Values frozen from an independent dense-Liouvillian matrix exponential.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use catgates::dynamics::{evolve, linspace, EvolveOptions};
use catgates::gates::{build, Design, GateSpec, Rates};
use catgates::noise::{adiabatic_elimination_effective, apply_noise, effective_kappa_2, NoiseParams};
use catgates::ode::Tolerances;
use catgates::{Complex64, HilbertSpace, LindbladModel, Logical, Operator, QuantumState};

fn tight() -> Tolerances {
    Tolerances { rtol: 1e-10, atol: 1e-12, ..Tolerances::default() }
}

fn spec(design: Design, alpha: f64, t: f64) -> GateSpec {
    GateSpec::new(design, PI, t, alpha).with_rates(Rates { g2: Some(1.0), kappa_b: Some(4.0), ..Rates::default() })
}

#[test]
fn two_mode_zeno_gate() {
    let gate = build(&spec(Design::StandardZeno, 1.0, 2.0).with_dim("a", 10).with_dim("b", 4)).unwrap();
    let r = gate.run(&gate.initial(Logical::Plus).unwrap(), 3, tight()).unwrap();
    let parity = r.series("parity").unwrap()[2].re;
    let n_b = r.series("n_b").unwrap()[2].re;
    assert_relative_eq!(parity, -0.4822078094644124, max_relative = 1e-7);
    assert_relative_eq!(n_b, 0.049917235704255894, max_relative = 1e-6);
}

#[test]
fn eliminated_zeno_gate() {
    let gate = build(&spec(Design::StandardZeno, 1.5, 3.0).eliminated(true).with_dim("a", 14)).unwrap();
    assert!(gate.buffer.is_none());
    let init = gate.initial(Logical::Plus).unwrap();
    let r = gate.run(&init, 2, tight()).unwrap();
    let n = Operator::n(gate.space(), "a").unwrap();
    assert_relative_eq!(r.series("parity").unwrap()[1].re, -0.9184830772276762, max_relative = 1e-7);
    assert_relative_eq!(r.final_state.expectation(&n).unwrap().re, 2.2856710306632526, max_relative = 1e-7);
}

#[test]
fn kerr_dephasing_and_loss_on_a_cat() {
    let space = HilbertSpace::bosonic(&[("a", 14)]).unwrap();
    let base = LindbladModel::new(&space);
    let noise = NoiseParams { k_a: 0.3, kappa_phi_a: 0.2, kappa_a: 0.1, ..NoiseParams::default() };
    let model = apply_noise(&base, &noise, &["a"], None).unwrap();
    let init = QuantumState::cat(&space, "a", Complex64::new(1.5, 0.0), 1).unwrap();
    let a = Operator::a(&space, "a").unwrap();
    let obs = vec![("a2".to_string(), a.mul(&a).unwrap()), ("parity".to_string(), Operator::parity(&space, "a").unwrap())];
    let opts = EvolveOptions { tol: tight(), leakage: None };
    let r = evolve(&model, &init, &[0.0, 2.0], &obs, &opts).unwrap();
    let a2 = r.series("a2").unwrap()[1];
    assert_relative_eq!(a2.re, 0.2558512516463977, max_relative = 1e-7);
    assert_relative_eq!(a2.im, -0.08693520633279717, max_relative = 1e-7);
    assert_relative_eq!(r.series("parity").unwrap()[1].re, 0.4623038578110749, max_relative = 1e-7);
}

#[test]
fn pure_dephasing_rate() {
    // (|0⟩ + |1⟩)/√2 under κ_φ D[a†a]: ⟨a⟩ = ½ e^{−κ_φ t/2}
    let space = HilbertSpace::bosonic(&[("a", 4)]).unwrap();
    let kphi = 0.3;
    let model = apply_noise(&LindbladModel::new(&space), &NoiseParams { kappa_phi_a: kphi, ..NoiseParams::default() }, &["a"], None).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let init = QuantumState::from_ket(&space, vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0), Complex64::default(), Complex64::default()]).unwrap();
    let grid = linspace(0.0, 5.0, 6);
    let obs = vec![("a".to_string(), Operator::a(&space, "a").unwrap())];
    let r = evolve(&model, &init, &grid, &obs, &EvolveOptions { tol: tight(), leakage: None }).unwrap();
    for (t, v) in grid.iter().zip(r.series("a").unwrap()) {
        assert_relative_eq!(v.re, 0.5 * (-0.5 * kphi * t).exp(), epsilon = 1e-9);
    }
}

#[test]
fn thermal_loss_relaxes_to_n_th() {
    let space = HilbertSpace::bosonic(&[("a", 12)]).unwrap();
    let noise = NoiseParams { kappa_a: 1.0, n_th_a: 0.2, ..NoiseParams::default() };
    let model = apply_noise(&LindbladModel::new(&space), &noise, &["a"], None).unwrap();
    let init = QuantumState::basis(&space, &[3]).unwrap();
    let grid = linspace(0.0, 2.0, 5);
    let obs = vec![("n".to_string(), Operator::n(&space, "a").unwrap())];
    let r = evolve(&model, &init, &grid, &obs, &EvolveOptions { tol: tight(), leakage: None }).unwrap();
    // d⟨n⟩/dt = −κ(⟨n⟩ − n_th), exact while the truncation is not reached
    for (t, v) in grid.iter().zip(r.series("n").unwrap()) {
        assert_relative_eq!(v.re, 0.2 + 2.8 * (-t).exp(), epsilon = 1e-5);
    }
}

#[test]
fn cats_are_dark_states_of_the_eliminated_jump() {
    let space = HilbertSpace::bosonic(&[("a", 30)]).unwrap();
    let alpha = 2.0;
    let (l, warnings) = adiabatic_elimination_effective(&space, "a", alpha, 1.0, 2.0).unwrap();
    assert!(warnings.is_empty());
    for which in [Logical::Plus, Logical::Minus, Logical::Zero] {
        let psi = QuantumState::logical(&space, "a", Complex64::new(alpha, 0.0), which).unwrap();
        let out = l.apply(psi.ket().unwrap());
        let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "{which:?}: {norm:e}");
    }
    // one photon above the cat is not dark
    let psi = QuantumState::basis(&space, &[1]).unwrap();
    let out = l.apply(psi.ket().unwrap());
    assert!(out.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1.0);
}

#[test]
fn effective_two_photon_rate() {
    assert_relative_eq!(effective_kappa_2(2.0, 1.0, 2.0), 0.5);
    let s = GateSpec::new(Design::AutonomousFeedback, PI, 1.0, 2.0).with_rates(Rates { g2: Some(1.0), kappa_ab: Some(2.0), ..Rates::default() });
    assert_relative_eq!(s.kappa_2(), effective_kappa_2(2.0, 1.0, 2.0));
}

#[test]
fn quadrature_drive_breaks_conjugation_symmetry() {
    use catgates::noise::phase_conjugation_check;
    use catgates::FockOp;
    let space = HilbertSpace::bosonic(&[("a", 6), ("b", 3)]).unwrap();
    let mut model = LindbladModel::new(&space);
    model.add_hamiltonian("x", Operator::fock(&space, "a", FockOp::X).unwrap(), catgates::TimeCoefficient::constant(0.4)).unwrap();
    model.add_dissipator("b", 2.0, Operator::a(&space, "b").unwrap()).unwrap();
    let clean = phase_conjugation_check(&model, 0.0).unwrap();
    assert!(clean.guaranteed() && clean.commutator_norm < 1e-12);

    model.add_hamiltonian("y", Operator::fock(&space, "a", FockOp::P).unwrap(), catgates::TimeCoefficient::constant(0.4)).unwrap();
    let broken = phase_conjugation_check(&model, 0.0).unwrap();
    assert_eq!(broken.uncovered, vec!["y".to_string()]);
    assert!(broken.commutator_norm > 0.1);
    let y = broken.per_term.iter().find(|(l, _)| l == "y").unwrap().1;
    assert!(y > 0.1);
}
