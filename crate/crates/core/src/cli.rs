//! Configuration parsing, scenario dispatch, and result emission.
//!
//! Outputs per run: one CSV per solution with columns (r, u, phi, alpha),
//! a scenario report as JSON, and a manifest listing every emitted file
//! with per-stage wall times. Result files (report + CSV) are byte-stable
//! for a fixed config and seed; the manifest carries timings and is not.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::experiments::{
    run_oscillatory, run_poisson, run_rigidity, run_sublinear, LabeledSolution, ScenarioOutput,
};
use crate::invariants;
use crate::model::{lambda_tilde, ProblemConfig, RawConfig, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "smform",
    version,
    about = "Radial Schrödinger-Maxwell systems on Euclidean and hyperbolic space forms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file; built-in defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "smform-out")]
    pub out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit nonzero if any scenario verdict fails.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multi-start uniqueness run for the Poisson-type system.
    Poisson {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Curvature-mismatch residual matrix and volume-ratio identity.
    Rigidity {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Trivial/two-solution dichotomy for sublinear nonlinearities.
    Sublinear {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep values in units of lambda_tilde, e.g. 0.1,0.5,2.0.
        #[arg(long = "lambda-sweep", value_delimiter = ',')]
        lambda_sweep: Option<Vec<f64>>,
    },
    /// Truncation sequence for oscillatory nonlinearities.
    Oscillatory {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of truncation levels.
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Run the full invariant suite and exit nonzero on any failure.
    Check {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Serialize)]
struct StageTiming {
    name: String,
    seconds: f64,
}

/// Inventory of one run: resolved config, artifact version, wall time per
/// stage, and every emitted file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub scenario: String,
    pub config: ProblemConfig,
    stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
}

/// Parse and resolve a configuration file against a scenario.
pub fn parse_config(path: &Path, scenario: Scenario) -> Result<ProblemConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawConfig = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!(
            "{}: parse error at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    ProblemConfig::resolve(&raw, scenario)
}

fn load_config(common: &CommonArgs, scenario: Scenario) -> Result<ProblemConfig> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path, scenario)?,
        None => ProblemConfig::resolve(&RawConfig::default(), scenario)?,
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_solution_csv(
    path: &Path,
    cfg: &ProblemConfig,
    radii: &[f64],
    sol: &LabeledSolution,
) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "r,u,phi,alpha")?;
    for (i, &r) in radii.iter().enumerate() {
        // `{}` is the shortest representation that parses back exactly
        writeln!(f, "{},{},{},{}", r, sol.u[i], sol.phi[i], cfg.weight.eval(r))?;
    }
    Ok(())
}

fn emit_scenario(
    common: &CommonArgs,
    cfg: &ProblemConfig,
    output: &ScenarioOutput,
    solve_seconds: f64,
    config_seconds: f64,
) -> Result<bool> {
    fs::create_dir_all(&common.out)?;
    let write_start = Instant::now();
    let problem = Problem::from_config(cfg)?;
    let radii = problem.grid.radii();

    let mut files = Vec::new();
    for sol in &output.solutions {
        let name = format!("{}.csv", sol.label);
        write_solution_csv(&common.out.join(&name), cfg, &radii, sol)?;
        files.push(name);
    }
    write_json(&common.out.join("report.json"), &output.report)?;
    files.push("report.json".into());

    for (name, ok) in output.report.verdicts() {
        println!(
            "{} {}::{}",
            if *ok { "PASS" } else { "FAIL" },
            cfg.scenario.name(),
            name
        );
    }
    let all_passed = output.report.all_passed();

    files.push("manifest.json".into());
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: cfg.scenario.name().to_string(),
        config: cfg.clone(),
        stages: vec![
            StageTiming { name: "config".into(), seconds: config_seconds },
            StageTiming { name: "solve".into(), seconds: solve_seconds },
            StageTiming {
                name: "write".into(),
                seconds: write_start.elapsed().as_secs_f64(),
            },
        ],
        outputs: files,
    };
    write_json(&common.out.join("manifest.json"), &manifest)?;
    Ok(all_passed)
}

#[derive(Debug, Serialize)]
struct StrictFailure<'a> {
    error: &'a str,
    scenario: &'a str,
    failed_verdicts: Vec<&'a str>,
}

/// Run one scenario end to end; returns the process exit code.
pub fn run_command(command: &Command) -> Result<i32> {
    match command {
        Command::Check { common } => {
            let t0 = Instant::now();
            let cfg = load_config(common, Scenario::Check)?;
            let config_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let results = invariants::run_all(cfg.seed)?;
            let solve_seconds = t1.elapsed().as_secs_f64();

            fs::create_dir_all(&common.out)?;
            for r in &results {
                println!("{} {} ({})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            write_json(&common.out.join("check_results.json"), &results)?;
            let manifest = RunManifest {
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                scenario: "check".into(),
                config: cfg,
                stages: vec![
                    StageTiming { name: "config".into(), seconds: config_seconds },
                    StageTiming { name: "check".into(), seconds: solve_seconds },
                ],
                outputs: vec!["check_results.json".into(), "manifest.json".into()],
            };
            write_json(&common.out.join("manifest.json"), &manifest)?;
            Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 })
        }
        Command::Poisson { common }
        | Command::Rigidity { common }
        | Command::Sublinear { common, .. }
        | Command::Oscillatory { common, .. } => {
            let scenario = match command {
                Command::Poisson { .. } => Scenario::Poisson,
                Command::Rigidity { .. } => Scenario::Rigidity,
                Command::Sublinear { .. } => Scenario::Sublinear,
                Command::Oscillatory { .. } => Scenario::Oscillatory,
                Command::Check { .. } => unreachable!(),
            };
            let t0 = Instant::now();
            let cfg = load_config(common, scenario)?;
            let config_seconds = t0.elapsed().as_secs_f64();

            let t1 = Instant::now();
            let output = match command {
                Command::Poisson { .. } => run_poisson(&cfg)?,
                Command::Rigidity { .. } => run_rigidity(&cfg)?,
                Command::Sublinear { lambda_sweep, .. } => {
                    // sweep is given in units of lambda_tilde
                    let sweep_units = lambda_sweep.clone().or_else(|| cfg.lambda_sweep.clone());
                    let absolute = match sweep_units {
                        Some(units) => {
                            let lt = lambda_tilde(&cfg.nonlinearity, &cfg.weight)?;
                            Some(units.iter().map(|u| u * lt).collect::<Vec<f64>>())
                        }
                        None => None,
                    };
                    run_sublinear(&cfg, absolute.as_deref())?
                }
                Command::Oscillatory { levels, .. } => {
                    let j = levels.unwrap_or(cfg.levels);
                    run_oscillatory(&cfg, j)?
                }
                Command::Check { .. } => unreachable!(),
            };
            let solve_seconds = t1.elapsed().as_secs_f64();

            let all_passed = emit_scenario(common, &cfg, &output, solve_seconds, config_seconds)?;
            let strict = match command {
                Command::Poisson { common }
                | Command::Rigidity { common }
                | Command::Sublinear { common, .. }
                | Command::Oscillatory { common, .. } => common.strict,
                Command::Check { .. } => unreachable!(),
            };
            if strict && !all_passed {
                let failed: Vec<&str> = output
                    .report
                    .verdicts()
                    .iter()
                    .filter(|(_, ok)| !**ok)
                    .map(|(k, _)| k.as_str())
                    .collect();
                let payload = StrictFailure {
                    error: "verdict_failure",
                    scenario: cfg.scenario.name(),
                    failed_verdicts: failed,
                };
                println!("{}", serde_json::to_string(&payload)?);
                return Ok(1);
            }
            Ok(0)
        }
    }
}

/// Entry point for the binary; maps errors to exit codes (2 for config and
/// usage problems, 1 for runtime failures).
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run_command(&cli.command) {
        Ok(code) => code,
        Err(e @ (Error::Config(_) | Error::Domain(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
