use std::f64::consts::PI;

use approx::assert_relative_eq;
use catgates_wasm_demo::{buffer_trajectory_native, flat_profile_native, zeno_gate_native};

#[test]
fn order_zero_profile_is_the_linear_drive() {
    let p = flat_profile_native(4.0, 0, 10.0, 21).unwrap();
    for (d, l) in p.drive().iter().zip(p.linear()) {
        assert_relative_eq!(*d, l, epsilon = 1e-14);
    }
    // ε_Z c₀ x with c₀ I₁ = θ/(2Tε_Z), I₁ = 2α
    let x = p.x();
    assert_relative_eq!(p.drive()[20], PI / (2.0 * 10.0 * 4.0) * x[20], max_relative = 1e-10);
}

#[test]
fn flat_profile_is_odd_and_flatter() {
    let p0 = flat_profile_native(6.0, 0, 10.0, 41).unwrap();
    let p2 = flat_profile_native(6.0, 2, 10.0, 41).unwrap();
    let d = p2.drive();
    for i in 0..d.len() {
        assert_relative_eq!(d[i], -d[d.len() - 1 - i], epsilon = 1e-14);
    }
    assert_eq!(p2.coefficients().len(), 3);
    assert!(p2.variance() < p0.variance());
}

#[test]
fn buffer_settles_then_empties() {
    let (alpha, kappa_b, t) = (2.0, 8.0, 10.0);
    let tr = buffer_trajectory_native(alpha, kappa_b, t, 201).unwrap();
    let (a, b) = (tr.a(), tr.b());
    assert_eq!(a.len(), 2 * tr.times().len());
    // steady state of the linear equations under constant drive: b = −ε/ν
    let eps = PI / (4.0 * alpha * t);
    let mid = 2 * 100;
    assert_relative_eq!(b[mid], -eps / (2.0 * alpha), max_relative = 1e-6);
    assert!(b[mid + 1].abs() < 1e-8);
    let end = a.len() - 2;
    assert_relative_eq!(a[end], alpha, epsilon = 1e-6);
    assert!(b[end].abs() < 1e-6 && b[end + 1].abs() < 1e-6);
}

#[test]
fn small_gate_tracks_zeno_prediction() {
    let r = zeno_gate_native(2.0, 4.0, 5.0, 11).unwrap();
    assert_eq!(r.times().len(), 11);
    assert_relative_eq!(r.parity()[0], 1.0, epsilon = 1e-8);
    assert!(r.parity()[10] < 0.0);
    assert!((r.p_z() / r.predicted() - 1.0).abs() < 0.3, "{} vs {}", r.p_z(), r.predicted());
}

#[test]
fn oversized_gate_rejected() {
    assert!(zeno_gate_native(9.0, 4.0, 5.0, 11).is_err());
    assert!(zeno_gate_native(0.0, 4.0, 5.0, 11).is_err());
}
