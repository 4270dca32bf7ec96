mod config;
mod output;
mod presets;
mod run;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use catgates::flat::{solve_flat_drive, FlatDriveProblem};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::ConfigError;
use output::{FileEntry, Manifest};
use presets::Scale;
use run::Table;

#[derive(Parser, Debug)]
#[command(name = "catgates", version, about = "Dissipative cat-qubit gate simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Maximum number of concurrent sweep points.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    /// Master seed for stochastic engines.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a TOML experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate the data behind one figure.
    Reproduce {
        figure: String,
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
        #[command(flatten)]
        common: Common,
    },
    /// Print flat-drive coefficients as CSV.
    OptimizeFlat {
        #[arg(long)]
        alpha2: f64,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        theta: f64,
        #[arg(long)]
        gate_time: f64,
        /// Drive normalization; defaults to 1/(8αT).
        #[arg(long)]
        epsilon_z: Option<f64>,
    },
    /// Run the noise and validation checks.
    Validate {
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
        #[command(flatten)]
        common: Common,
    },
    /// List reproducible figure ids.
    ListFigures,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?)
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let config = err.chain().any(|e| e.downcast_ref::<ConfigError>().is_some());
            let report = serde_json::json!({
                "error": {
                    "kind": if config { "config" } else { "engine" },
                    "message": err.to_string(),
                    "causes": err.chain().skip(1).map(|e| e.to_string()).collect::<Vec<_>>(),
                }
            });
            eprintln!("{report}");
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, common } => cmd_run(&config, &common),
        Command::Reproduce { figure, scale, common } => cmd_reproduce(&figure, scale, &common),
        Command::OptimizeFlat { alpha2, order, theta, gate_time, epsilon_z } => cmd_optimize_flat(alpha2, order, theta, gate_time, epsilon_z),
        Command::Validate { scale, common } => cmd_validate(scale, &common),
        Command::ListFigures => {
            for (id, what) in presets::FIGURES {
                println!("{id:<8} {what}");
            }
            Ok(())
        }
    }
}

fn cmd_run(path: &Path, common: &Common) -> Result<()> {
    let started = Instant::now();
    let (text, points) = config::load(path)?;
    let seed = common.seed.or(points[0].config.engine.seed).unwrap_or(0);
    let results: Vec<Result<(run::PointResult, f64)>> = pool(common.jobs)?.install(|| {
        points
            .par_iter()
            .map(|p| {
                let t = Instant::now();
                run::run_point(&p.config, seed)
                    .with_context(|| format!("sweep point {}", config::describe(&p.overrides)))
                    .map(|r| (r, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let mut files = Vec::new();
    for (i, (p, r)) in points.iter().zip(results).enumerate() {
        let (res, wall) = r?;
        let name = format!("point_{i:03}.csv");
        let (path, sha) = output::write_table(&common.out, &name, &res.table)?;
        for w in &res.warnings {
            eprintln!("warning: {name}: {w}");
        }
        println!("{}", path.display());
        let parameters = serde_json::to_value(p.overrides.iter().map(|(k, v)| (k.clone(), toml_to_json(v))).collect::<serde_json::Map<_, _>>())?;
        let mut cfg = p.config.clone();
        cfg.engine.seed = Some(seed);
        files.push(FileEntry {
            file: name,
            sha256: sha,
            rows: res.table.rows.len(),
            columns: res.table.columns.clone(),
            parameters,
            config: Some(cfg.to_toml()),
            warnings: res.warnings,
            wall_time_s: wall,
        });
    }
    let manifest = Manifest {
        schema: output::SCHEMA,
        command: command_line(),
        versions: output::versions(),
        config_sha256: Some(output::sha256_hex(text.as_bytes())),
        figure: None,
        scale: None,
        seed,
        jobs: common.jobs,
        files,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    output::write_manifest(&common.out, &manifest)?;
    Ok(())
}

fn toml_to_json(v: &toml::Value) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn write_tables(out: &Path, produced: Vec<(String, serde_json::Value, Table, f64)>) -> Result<Vec<FileEntry>> {
    let mut files = Vec::new();
    for (name, parameters, table, wall) in produced {
        let (path, sha) = output::write_table(out, &name, &table)?;
        println!("{}", path.display());
        files.push(FileEntry { file: name, sha256: sha, rows: table.rows.len(), columns: table.columns, parameters, config: None, warnings: Vec::new(), wall_time_s: wall });
    }
    Ok(files)
}

fn cmd_reproduce(figure: &str, scale: Scale, common: &Common) -> Result<()> {
    let started = Instant::now();
    let tasks = presets::tasks(figure, scale).map_err(|e| ConfigError(e.to_string()))?;
    let results: Vec<Result<(String, serde_json::Value, Table, f64)>> = pool(common.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let clock = Instant::now();
                let table = (t.job)().with_context(|| format!("{figure}: {}", t.file))?;
                Ok((t.file.clone(), t.parameters.clone(), table, clock.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let files = write_tables(&common.out, results.into_iter().collect::<Result<_>>()?)?;
    let manifest = Manifest {
        schema: output::SCHEMA,
        command: command_line(),
        versions: output::versions(),
        config_sha256: None,
        figure: Some(figure.to_string()),
        scale: Some(scale.name().to_string()),
        seed: common.seed.unwrap_or(0),
        jobs: common.jobs,
        files,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    output::write_manifest(&common.out, &manifest)?;
    Ok(())
}

fn cmd_optimize_flat(alpha2: f64, order: usize, theta: f64, gate_time: f64, epsilon_z: Option<f64>) -> Result<()> {
    if !(alpha2 > 0.0 && gate_time > 0.0) {
        return Err(ConfigError("alpha2 and gate-time must be positive".into()).into());
    }
    let mut problem = FlatDriveProblem::standard(order, alpha2.sqrt(), theta, gate_time);
    if let Some(e) = epsilon_z {
        problem.epsilon_z = e;
    }
    let sol = solve_flat_drive(&problem)?;
    let table = Table::from_columns(vec![
        ("n", (0..sol.coefficients.len()).map(|n| n as f64).collect()),
        ("c_n", sol.coefficients.clone()),
        ("epsilon_z_c_n", sol.coefficients.iter().map(|c| c * problem.epsilon_z).collect()),
    ]);
    print!("{}", String::from_utf8(output::csv_bytes(&table)?)?);
    eprintln!("epsilon_z = {:e}, lambda = {:e}, variance = {:e}, condition = {:.3e}", problem.epsilon_z, sol.lagrange_multiplier, sol.variance, sol.condition);
    Ok(())
}

fn cmd_validate(scale: Scale, common: &Common) -> Result<()> {
    let started = Instant::now();
    let seed = common.seed.unwrap_or(0);
    let suite = pool(common.jobs)?.install(|| validate::run_suite(scale, seed))?;
    let produced = suite.tables.into_iter().map(|(name, t)| (name, serde_json::json!({"scale": scale.name()}), t, 0.0)).collect();
    let files = write_tables(&common.out, produced)?;
    for c in &suite.checks {
        println!("{:<24} {} value={:.3e} threshold={:.1e} {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.value, c.threshold, c.detail);
    }
    let summary = serde_json::to_vec_pretty(&serde_json::json!({ "checks": suite.checks }))?;
    output::write_atomic(&common.out.join("validation.json"), &summary)?;
    let manifest = Manifest {
        schema: output::SCHEMA,
        command: command_line(),
        versions: output::versions(),
        config_sha256: None,
        figure: None,
        scale: Some(scale.name().to_string()),
        seed,
        jobs: common.jobs,
        files,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    output::write_manifest(&common.out, &manifest)?;
    let failed: Vec<_> = suite.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    anyhow::ensure!(failed.is_empty(), "validation checks failed: {}", failed.join(", "));
    Ok(())
}
