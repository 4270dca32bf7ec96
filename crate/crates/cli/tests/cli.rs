use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_catgates");

const ZENO: &str = r#"
[gate]
design = "standard_zeno"
theta = 3.141592653589793
gate_time = 2.0
alpha = 1.5

[gate.rates]
g2 = 1.0
kappa_b = 8.0

[gate.truncations]
a = 14
b = 5

[output]
n_points = 5
"#;

const STOCHASTIC: &str = r#"
[gate]
design = "photodetection"
theta = 3.141592653589793
gate_time = 1.0
alpha = 1.5
eta = 1.0

[gate.rates]
g2 = 1.0
kappa_b = 8.0

[gate.truncations]
a = 14
b = 5

[engine]
kind = "stochastic"
n_traj = 16
seed = 5

[output]
observables = ["parity", "p_Z", "n_b"]
n_points = 5

[[sweep]]
path = "gate.rates.kappa_b"
values = [4.0, 8.0]
"#;

fn catgates(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_config(dir: &Path, text: &str, out: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{out}.toml"));
    std::fs::write(&cfg, text).unwrap();
    let out_dir = dir.join(out);
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    catgates(&args)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn minimal_run_writes_schema_csv_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), ZENO, "o", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/point_000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("time,parity,leakage,p_Z"));
    assert_eq!(lines.count(), 5);
    assert!(!csv.contains('\r'));
    let m = manifest(&tmp.path().join("o"));
    assert_eq!(m["schema"], 1);
    let bytes = std::fs::read(tmp.path().join("o/point_000.csv")).unwrap();
    use sha2::Digest;
    let sha: String = sha2::Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["files"][0]["sha256"], sha.as_str());
}

#[test]
fn final_p_z_follows_zeno_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(tmp.path(), ZENO, "o", &[]).status.success());
    let csv = std::fs::read_to_string(tmp.path().join("o/point_000.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 2.0);
    // θ²/(16|α|⁴κ₂T) with κ₂ = 4g₂²/κ_b = 0.5
    let predicted = std::f64::consts::PI.powi(2) / (16.0 * 1.5f64.powi(4) * 0.5 * 2.0);
    assert!(last[1] < 0.0, "parity {}", last[1]);
    assert!((last[3] / predicted - 1.0).abs() < 0.25, "p_Z {} vs {predicted}", last[3]);
}

#[test]
fn stochastic_sweep_is_independent_of_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(tmp.path(), STOCHASTIC, "a", &["--jobs", "1"]).status.success());
    assert!(run_config(tmp.path(), STOCHASTIC, "b", &["--jobs", "3"]).status.success());
    for f in ["point_000.csv", "point_001.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let header = std::fs::read_to_string(tmp.path().join("a/point_000.csv")).unwrap();
    assert!(header.lines().nth(1).unwrap().starts_with("time,parity,parity_se,p_Z,p_Z_se,n_b,n_b_se"));
}

#[test]
fn seed_flag_changes_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(tmp.path(), STOCHASTIC, "a", &["--seed", "1"]).status.success());
    assert!(run_config(tmp.path(), STOCHASTIC, "b", &["--seed", "2"]).status.success());
    let a = std::fs::read(tmp.path().join("a/point_001.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/point_001.csv")).unwrap();
    assert_ne!(a, b);
    assert_eq!(manifest(&tmp.path().join("b"))["seed"], 2);
}

#[test]
fn manifest_config_regenerates_csv() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(tmp.path(), STOCHASTIC, "a", &[]).status.success());
    let m = manifest(&tmp.path().join("a"));
    let entry = &m["files"][1];
    let out = run_config(tmp.path(), entry["config"].as_str().unwrap(), "again", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let again = manifest(&tmp.path().join("again"));
    assert_eq!(again["files"][0]["sha256"], entry["sha256"]);
}

#[test]
fn unknown_key_exits_2_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), &ZENO.replace("kappa_b", "kapa_b"), "o", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("kapa_b"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn undersized_truncation_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), &ZENO.replace("a = 14", "a = 6"), "o", &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mhz_units_match_internal_units() {
    let tmp = tempfile::tempdir().unwrap();
    // g2/2π = 2 MHz, κ_b/2π = 16 MHz, T = 2/(2π·2) µs
    let t_us = 2.0 / (2.0 * std::f64::consts::PI * 2.0);
    let mhz = ZENO.replace("g2 = 1.0\nkappa_b = 8.0", "kappa_b = 16.0").replace("gate_time = 2.0", &format!("gate_time = {t_us:?}")) + "\n[units]\nunit = \"MHz\"\ng2 = 2.0\n";
    assert!(run_config(tmp.path(), ZENO, "a", &[]).status.success());
    let out = run_config(tmp.path(), &mhz, "b", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let last = |d: &str| -> Vec<f64> {
        let csv = std::fs::read_to_string(tmp.path().join(d).join("point_000.csv")).unwrap();
        csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect()
    };
    let (a, b) = (last("a"), last("b"));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()), "{a:?} vs {b:?}");
    }
}

#[test]
fn unknown_figure_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = catgates(&["reproduce", "fig99", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn list_figures_covers_presets() {
    let out = catgates(&["list-figures"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["fig1b", "fig2b", "fig2c", "fig5", "fig6", "fig10c", "fig13", "fig14"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id}");
    }
}

#[test]
fn optimize_flat_order_zero_is_linear_drive() {
    let out = catgates(&["optimize-flat", "--alpha2", "8", "--order", "0", "--gate-time", "10", "--epsilon-z", "0.01"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // θ/(2Tε·I₁) with I₁ = 2α
    let expected = std::f64::consts::PI / (2.0 * 10.0 * 0.01 * 2.0 * 8f64.sqrt());
    assert!((row[1] - expected).abs() < 1e-10 * expected, "{} vs {expected}", row[1]);
}

#[test]
fn reproduce_fig2c_desk() {
    let tmp = tempfile::tempdir().unwrap();
    let out = catgates(&["reproduce", "fig2c", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("fig2c.csv")).unwrap();
    let p: Vec<f64> = csv.lines().skip(2).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[1] <= w[0]), "jump probability falls with gate time: {p:?}");
    assert_eq!(manifest(tmp.path())["figure"], "fig2c");
}
