use approx::assert_relative_eq;
use catgates::dynamics::{evolve, linspace, EvolveOptions};
use catgates::flat::{odd_polynomial, solve_flat_drive, FlatDriveProblem};
use catgates::metrics::cnot_error_probabilities;
use catgates::noise::conjugate;
use catgates::ode::Tolerances;
use catgates::{Complex64, HilbertSpace, LindbladModel, Operator, QuantumState, TimeCoefficient};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn small_model(drive: f64, loss: f64, two: f64, kerr: f64) -> (LindbladModel, catgates::SpaceRef) {
    let space = HilbertSpace::bosonic(&[("a", 7)]).unwrap();
    let mut m = LindbladModel::new(&space);
    let a = Operator::a(&space, "a").unwrap();
    m.add_hamiltonian("x", a.add(&a.dag()).unwrap(), TimeCoefficient::window(drive, 1.0)).unwrap();
    m.add_hamiltonian("kerr", a.dag().mul(&a.dag()).unwrap().mul(&a).unwrap().mul(&a).unwrap(), TimeCoefficient::constant(kerr)).unwrap();
    m.add_dissipator("loss", loss, a.clone()).unwrap();
    m.add_dissipator("two", two, a.mul(&a).unwrap().add_identity(Complex64::new(-1.0, 0.0))).unwrap();
    (m, space)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_stays_a_density_matrix(drive in -1.0..1.0f64, loss in 0.0..1.0f64, two in 0.0..2.0f64, kerr in -0.5..0.5f64, n0 in 0usize..4) {
        let (m, space) = small_model(drive, loss, two, kerr);
        let init = QuantumState::basis(&space, &[n0]).unwrap();
        let r = evolve(&m, &init, &linspace(0.0, 1.5, 4), &[], &EvolveOptions::with_rtol(1e-8)).unwrap();
        prop_assert!((r.final_state.trace() - 1.0).abs() < 1e-8);
        prop_assert!(r.final_state.check_physical(1e-7).is_ok());
    }

    #[test]
    fn flat_drive_meets_its_rotation(alpha2 in 1.0..10.0f64, order in 0usize..4, t in 1.0..50.0f64) {
        let p = FlatDriveProblem::standard(order, alpha2.sqrt(), std::f64::consts::PI, t);
        let s = solve_flat_drive(&p).unwrap();
        let got: f64 = s.coefficients.iter().enumerate().map(|(n, c)| c * s.moments[2 * n + 1]).sum();
        prop_assert!((got / p.target() - 1.0).abs() < 1e-8);
        prop_assert!(s.variance >= -1e-12);
    }

    #[test]
    fn odd_polynomial_is_odd(c in prop::collection::vec(-3.0..3.0f64, 1..5), x in -4.0..4.0f64) {
        assert_relative_eq!(odd_polynomial(&c, -x), -odd_polynomial(&c, x), epsilon = 1e-12);
    }

    #[test]
    fn conjugation_is_an_involution(seed in prop::collection::vec(-1.0..1.0f64, 2 * 36)) {
        let space = HilbertSpace::bosonic(&[("a", 3), ("b", 2)]).unwrap();
        let rho = DMatrix::from_fn(6, 6, |i, j| Complex64::new(seed[i * 6 + j], seed[36 + i * 6 + j]));
        let back = conjugate(&space, &conjugate(&space, &rho));
        prop_assert!((back - rho).camax() < 1e-15);
    }

    #[test]
    fn cnot_probabilities_recombine(pc in -1.0..1.0f64, pt in -1.0..1.0f64, pct in -1.0..1.0f64) {
        let (zc, zt, zczt) = cnot_error_probabilities(pc, pt, pct);
        assert_relative_eq!(zc + zczt, 0.5 * (1.0 - pc), epsilon = 1e-14);
        assert_relative_eq!(zt + zczt, 0.5 * (1.0 - pt), epsilon = 1e-14);
        assert_relative_eq!(zc + zt, 0.5 * (1.0 - pct), epsilon = 1e-14);
    }

    #[test]
    fn gaussian_envelope_keeps_its_area(area in 0.01..5.0f64, t in 0.5..40.0f64) {
        let g = TimeCoefficient::gaussian_with_area(area, 0.0, t);
        assert_relative_eq!(g.integral(0.0, t).re, area, max_relative = 1e-10);
        let w = TimeCoefficient::window(area / t, t);
        assert_relative_eq!(w.integral(0.0, 2.0 * t).re, area, max_relative = 1e-12);
    }

    #[test]
    fn cat_parity_matches_its_sign(alpha in 0.3..2.5f64, sign in prop::sample::select(vec![1i8, -1])) {
        let space = HilbertSpace::bosonic(&[("a", 30)]).unwrap();
        let s = QuantumState::cat(&space, "a", Complex64::new(alpha, 0.0), sign).unwrap();
        let p = s.expectation(&Operator::parity(&space, "a").unwrap()).unwrap().re;
        assert_relative_eq!(p, sign as f64, epsilon = 1e-12);
    }
}

#[test]
fn tolerances_default_to_tight() {
    let t = Tolerances::default();
    assert_eq!((t.rtol, t.atol), (1e-8, 1e-10));
}
