use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use catgates::gates::GateSpec;
use catgates::noise::NoiseParams;
use catgates::ode::Tolerances;
use catgates::Logical;
use serde::{Deserialize, Serialize};

/// Anything wrong with the user's configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    #[default]
    Deterministic,
    Stochastic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnravelingKind {
    #[default]
    Ket,
    Density,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Engine {
    pub kind: EngineKind,
    pub n_traj: usize,
    /// Master seed; `--seed` takes precedence.
    pub seed: Option<u64>,
    pub unraveling: UnravelingKind,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Engine {
    fn default() -> Self {
        let tol = Tolerances::default();
        Self { kind: EngineKind::Deterministic, n_traj: 200, seed: None, unraveling: UnravelingKind::Ket, rtol: tol.rtol, atol: tol.atol }
    }
}

impl Engine {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rtol: self.rtol, atol: self.atol, ..Tolerances::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Zero,
    One,
    #[default]
    Plus,
    Minus,
}

impl From<InitialState> for Logical {
    fn from(s: InitialState) -> Self {
        match s {
            InitialState::Zero => Logical::Zero,
            InitialState::One => Logical::One,
            InitialState::Plus => Logical::Plus,
            InitialState::Minus => Logical::Minus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub observables: Vec<String>,
    pub n_points: usize,
    pub initial: InitialState,
}

impl Default for Output {
    fn default() -> Self {
        Self { observables: vec!["parity".into(), "leakage".into(), "p_Z".into()], n_points: 41, initial: InitialState::Plus }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconvergenceMode {
    #[default]
    None,
    Fixed,
    Converged,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Reconvergence {
    pub mode: ReconvergenceMode,
    /// Drive-off time appended after the gate (`fixed`).
    pub t_c: Option<f64>,
    /// Leakage and buffer-population threshold (`converged`).
    pub tolerance: Option<f64>,
    pub max_time: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[default]
    #[serde(rename = "g2")]
    G2,
    #[serde(rename = "MHz")]
    MHz,
}

/// With `unit = "MHz"` every rate is read as X/2π in MHz and every time in
/// µs; `g2` gives g₂/2π in MHz and sets the internal unit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Units {
    pub unit: Unit,
    pub g2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gate: GateSpec,
    #[serde(default)]
    pub noise: Option<NoiseParams>,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub reconvergence: Reconvergence,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub sweep: Vec<Sweep>,
}

/// One resolved sweep point: the overrides that produced it and the config
/// in internal units with the sweep removed.
#[derive(Clone, Debug)]
pub struct Point {
    pub overrides: BTreeMap<String, toml::Value>,
    pub config: RunConfig,
}

pub const OPERATOR_OBSERVABLES: &[&str] = &["parity", "parity_t", "parity_ct", "n_a", "n_b", "re_a", "im_a", "re_b", "im_b"];
pub const DERIVED_OBSERVABLES: &[&str] = &["leakage", "p_Z", "p_X", "p_ZC", "p_ZT", "p_ZCZT"];

pub fn load(path: &Path) -> Result<(String, Vec<Point>), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let points = parse(&text)?;
    Ok((text, points))
}

pub fn parse(text: &str) -> Result<Vec<Point>, ConfigError> {
    let raw: toml::Table = toml::from_str(text).map_err(|e| ConfigError(format!("config: {}", e.message())))?;
    // full parse first so that unknown keys are reported even without sweeps
    let base = decode(toml::Value::Table(raw.clone()))?;
    let mut points = Vec::new();
    for overrides in combinations(&base.sweep) {
        let mut value = toml::Value::Table(raw.clone());
        if let toml::Value::Table(t) = &mut value {
            t.remove("sweep");
        }
        for (path, v) in &overrides {
            set_path(&mut value, path, v.clone())?;
        }
        let mut config = decode(value).map_err(|e| ConfigError(format!("sweep point {}: {e}", describe(&overrides))))?;
        config.to_internal_units()?;
        config.validate()?;
        points.push(Point { overrides, config });
    }
    Ok(points)
}

fn decode(value: toml::Value) -> Result<RunConfig, ConfigError> {
    RunConfig::deserialize(value).map_err(|e| ConfigError(format!("config: {}", e.message())))
}

pub fn describe(overrides: &BTreeMap<String, toml::Value>) -> String {
    overrides.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

fn combinations(sweeps: &[Sweep]) -> Vec<BTreeMap<String, toml::Value>> {
    let mut out = vec![BTreeMap::new()];
    for s in sweeps {
        out = out
            .into_iter()
            .flat_map(|base| {
                s.values.iter().map(move |v| {
                    let mut m = base.clone();
                    m.insert(s.path.clone(), v.clone());
                    m
                })
            })
            .collect();
    }
    out
}

fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) || keys[0] == "sweep" {
        return config_err(format!("invalid sweep path `{path}`"));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| ConfigError(format!("sweep path `{path}` crosses a non-table value")))?;
        node = table.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node.as_table_mut().ok_or_else(|| ConfigError(format!("sweep path `{path}` crosses a non-table value")))?;
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    #[cfg(test)]
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut points = parse(text)?;
        if points.len() != 1 {
            return config_err("expected a config without sweeps");
        }
        Ok(points.remove(0).config)
    }

    /// Converts MHz/µs inputs to g₂ units in place.
    pub fn to_internal_units(&mut self) -> Result<(), ConfigError> {
        if self.units.unit == Unit::G2 {
            return Ok(());
        }
        let Some(g2) = self.units.g2.filter(|g| *g > 0.0 && g.is_finite()) else {
            return config_err("units.g2 (g2/2pi in MHz) must be positive when unit = \"MHz\"");
        };
        if let Some(v) = self.gate.rates.g2 {
            if (v - g2).abs() > 1e-12 * g2 {
                return config_err(format!("gate.rates.g2 = {v} MHz disagrees with units.g2 = {g2} MHz"));
            }
        }
        let rate = |x: f64| x / g2;
        let time = |t: f64| t * 2.0 * PI * g2;
        let r = &mut self.gate.rates;
        r.g2 = Some(1.0);
        for v in [&mut r.kappa_b, &mut r.kappa_ab, &mut r.kappa_z, &mut r.kappa_z_prime, &mut r.kappa_q, &mut r.delta] {
            *v = v.map(rate);
        }
        self.gate.gate_time = time(self.gate.gate_time);
        if let Some(n) = &mut self.noise {
            for v in [&mut n.kappa_a, &mut n.kappa_phi_a, &mut n.k_a, &mut n.k_b, &mut n.chi_ab, &mut n.dark_count_rate] {
                *v = rate(*v);
            }
        }
        let rc = &mut self.reconvergence;
        rc.t_c = rc.t_c.map(time);
        rc.max_time = rc.max_time.map(time);
        self.units = Units::default();
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gate.validate().map_err(|e| ConfigError(format!("gate: {e}")))?;
        if let Some(n) = &self.noise {
            n.validate().map_err(|e| ConfigError(format!("noise: {e}")))?;
        }
        let e = &self.engine;
        if !(e.rtol > 0.0 && e.atol > 0.0) {
            return config_err("engine.rtol and engine.atol must be positive");
        }
        if e.kind == EngineKind::Stochastic && e.n_traj == 0 {
            return config_err("engine.n_traj must be at least 1");
        }
        if self.output.n_points < 2 {
            return config_err("output.n_points must be at least 2");
        }
        if self.output.observables.is_empty() {
            return config_err("output.observables is empty");
        }
        for o in &self.output.observables {
            if !OPERATOR_OBSERVABLES.contains(&o.as_str()) && !DERIVED_OBSERVABLES.contains(&o.as_str()) {
                return config_err(format!("unknown observable `{o}`"));
            }
            if e.kind == EngineKind::Stochastic {
                // ensemble means carry a standard error of the real part only
                if o.starts_with("im_") || (!OPERATOR_OBSERVABLES.contains(&o.as_str()) && o != "p_Z") {
                    return config_err(format!("observable `{o}` needs the deterministic engine"));
                }
                let k = self.gate.theta / PI;
                let plus_minus = matches!(self.output.initial, InitialState::Plus | InitialState::Minus);
                if o == "p_Z" && (!plus_minus || (k - k.round()).abs() > 1e-12) {
                    return config_err("stochastic p_Z needs initial = \"plus\" or \"minus\" and theta a multiple of pi");
                }
            }
        }
        let cnot = self.gate.design.is_cnot();
        for o in &self.output.observables {
            let needs_cnot = matches!(o.as_str(), "parity_t" | "parity_ct" | "p_ZC" | "p_ZT" | "p_ZCZT");
            if needs_cnot && !cnot {
                return config_err(format!("observable `{o}` needs a CNOT design"));
            }
        }
        if self.output.observables.iter().any(|o| o == "p_X") && !matches!(self.output.initial, InitialState::Zero | InitialState::One) {
            return config_err("p_X needs output.initial = \"zero\" or \"one\"");
        }
        let rc = &self.reconvergence;
        match rc.mode {
            ReconvergenceMode::None => {}
            ReconvergenceMode::Fixed => {
                if !rc.t_c.is_some_and(|t| t > 0.0) {
                    return config_err("reconvergence.t_c must be positive for mode = \"fixed\"");
                }
            }
            ReconvergenceMode::Converged => {
                if e.kind == EngineKind::Stochastic {
                    return config_err("converged reconvergence needs the deterministic engine");
                }
                if !rc.tolerance.is_some_and(|t| t > 0.0) {
                    return config_err("reconvergence.tolerance must be positive for mode = \"converged\"");
                }
            }
        }
        Ok(())
    }

    /// TOML of the resolved point; reparses to the same config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[gate]
design = "standard_zeno"
theta = 3.141592653589793
gate_time = 4.0
alpha = 2.0
[gate.rates]
g2 = 1.0
kappa_b = 8.0
"#;

    #[test]
    fn minimal_parses() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.output.observables, ["parity", "leakage", "p_Z"]);
        assert_eq!(c.engine.kind, EngineKind::Deterministic);
    }

    #[test]
    fn unknown_key_named() {
        let bad = MINIMAL.replace("kappa_b", "kapa_b");
        let err = parse(&bad).unwrap_err();
        assert!(err.0.contains("kapa_b"), "{err}");
    }

    #[test]
    fn sweep_is_cartesian() {
        let text = format!("{MINIMAL}\n[[sweep]]\npath = \"gate.alpha\"\nvalues = [1.5, 2.0]\n[[sweep]]\npath = \"gate.rates.kappa_b\"\nvalues = [4.0, 8.0, 16.0]\n");
        let pts = parse(&text).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[5].config.gate.alpha, 2.0);
        assert_eq!(pts[5].config.gate.rates.kappa_b, Some(16.0));
        assert!(pts.iter().all(|p| p.config.sweep.is_empty()));
    }

    #[test]
    fn bad_sweep_path_rejected() {
        let text = format!("{MINIMAL}\n[[sweep]]\npath = \"gate.rates.kapa_b\"\nvalues = [4.0]\n");
        assert!(parse(&text).unwrap_err().0.contains("kapa_b"));
    }

    #[test]
    fn mhz_conversion() {
        let text = MINIMAL.replace("[gate.rates]\ng2 = 1.0\nkappa_b = 8.0", "[gate.rates]\nkappa_b = 16.0") + "[units]\nunit = \"MHz\"\ng2 = 2.0\n";
        let c = RunConfig::from_toml(&text).unwrap();
        assert_eq!(c.gate.rates.kappa_b, Some(8.0));
        assert!((c.gate.gate_time - 4.0 * 2.0 * PI * 2.0).abs() < 1e-12);
    }

    #[test]
    fn resolved_config_roundtrips() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
