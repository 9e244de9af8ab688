//! `geoxray`: runs one verification experiment from a TOML config, writes
//! its artifacts and a manifest, and exits 0 iff every criterion passed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use geoxray_core::random::rng;
use serde_json::json;

use commands::{Context, Outcome};
use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] geoxray_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn kind(&self) -> String {
        match self {
            CliError::Config(_) => "config".into(),
            CliError::Core(e) => format!("{e:?}").split([' ', '(', '{']).next().unwrap_or("core").to_string(),
            CliError::Io(_) => "io".into(),
            CliError::Json(_) => "serialization".into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "geoxray", version, about = "Attenuated geodesic X-ray transform experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; defaults apply to anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `out`, or `out` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ray-parallel work.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check strict convexity, conjugate points and trapping of the metric.
    ValidateSurface,
    /// Attenuated transform of a scalar integrand on the fan-beam lattice.
    Forward,
    /// Transform of kernel elements built from random potentials.
    KernelCheck,
    /// Degree of transport solutions and one-sided mode checks.
    DegreeCheck,
    /// Discrete adjoint identity on random pairs.
    AdjointTest,
    /// Reconstruction of a scalar phantom by weighted CGLS.
    Invert,
    /// SVD of the pair-mode matrix against the kernel span.
    KernelAnalysis,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ValidateSurface => "validate-surface",
            Command::Forward => "forward",
            Command::KernelCheck => "kernel-check",
            Command::DegreeCheck => "degree-check",
            Command::AdjointTest => "adjoint-test",
            Command::Invert => "invert",
            Command::KernelAnalysis => "kernel-analysis",
        }
    }
}

fn run(cli: &Cli, config: &ExperimentConfig, out: PathBuf) -> Result<Outcome, CliError> {
    commands::ensure_dir(&out)?;
    let mut ctx = Context { config, config_hash: config.hash(), out, rng: rng(config.seed) };
    match cli.command {
        Command::ValidateSurface => commands::validate_surface(&mut ctx),
        Command::Forward => commands::forward(&mut ctx),
        Command::KernelCheck => commands::kernel_check(&mut ctx),
        Command::DegreeCheck => commands::degree_check(&mut ctx),
        Command::AdjointTest => commands::adjoint_test(&mut ctx),
        Command::Invert => commands::invert(&mut ctx),
        Command::KernelAnalysis => commands::kernel_analysis_cmd(&mut ctx),
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let command = cli.command.name();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => return report_error(command, &e, None),
    };
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let outcome = match run(&cli, &config, out.clone()) {
        Ok(o) => o,
        Err(e) => return report_error(command, &e, Some(&out)),
    };

    let warnings_ok = !cli.strict || outcome.warnings.is_empty();
    let passed = warnings_ok && outcome.criteria.iter().all(|c| c.passed);
    let manifest = json!({
        "command": command,
        "config_hash": config.hash(),
        "seed": config.seed,
        "strict": cli.strict,
        "threads": rayon::current_num_threads(),
        "versions": { "geoxray": env!("CARGO_PKG_VERSION"), "geoxray-core": geoxray_core::VERSION },
        "wall_time_s": start.elapsed().as_secs_f64(),
        "criteria": outcome.criteria,
        "warnings": outcome.warnings,
        "artifacts": outcome.artifacts,
        "passed": passed,
    });
    let path = out.join(format!("{command}.manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = std::fs::write(&path, text + "\n") {
        return report_error(command, &CliError::Io(e), None);
    }
    for c in &outcome.criteria {
        println!("{:<24} {:>12.4e} {} {:<10.3e} {}", c.name, c.value, c.comparison, c.tolerance, verdict(c.passed));
    }
    if !outcome.warnings.is_empty() {
        println!("{} warning(s){}", outcome.warnings.len(), if cli.strict { " (strict)" } else { "" });
    }
    println!("{command}: {}", verdict(passed));
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Prints a JSON error record on stderr (and into the output directory when
/// it exists) and returns exit status 2.
fn report_error(command: &str, err: &CliError, out: Option<&PathBuf>) -> ExitCode {
    let record = json!({ "command": command, "error": { "kind": err.kind(), "message": err.to_string() } });
    let text = serde_json::to_string_pretty(&record).expect("error record serializes");
    eprintln!("{text}");
    if let Some(dir) = out.filter(|d| d.is_dir()) {
        let _ = std::fs::write(dir.join(format!("{command}.error.json")), text + "\n");
    }
    ExitCode::from(2)
}
