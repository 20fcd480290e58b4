//! `dilab`: run curvature, asymptotics, functional and geodesic experiments.

mod commands;
mod config;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use dilab::LabError;

use crate::config::Config;
use crate::output::{Run, Summary, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "dilab", version, about = "Direct-image curvature and Bergman geodesics on the projective line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; defaults are used for absent fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "dilab-out")]
    out: PathBuf,
    /// Worker threads; the machine default when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Distance between Bergman geodesics and the toric geodesic.
    Geodesic,
    /// Curvature of the direct-image bundles along a path.
    Curvature,
    /// Large-p tables for the curvature trace, tr A and the Bergman density.
    Asymptotics,
    /// I, L_p and ~L_p along a path.
    Functionals,
    /// A reduced pass over all checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Geodesic => "geodesic",
            Command::Curvature => "curvature",
            Command::Asymptotics => "asymptotics",
            Command::Functionals => "functionals",
            Command::Selftest => "selftest",
        }
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_FAILED: u8 = 2;

/// Errors caused by the numerics rather than by the input.
fn is_numerical(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<LabError>(),
            Some(
                LabError::Quadrature(_)
                    | LabError::NotPositiveDefinite(_)
                    | LabError::IllConditioned(_)
                    | LabError::OracleRejected(_)
                    | LabError::NotGeodesic(_)
            )
        )
    })
}

fn execute(cli: &Cli, cfg: &Config, run: &mut Run, threads: usize) -> Result<()> {
    match cli.command {
        Command::Geodesic => commands::geodesic(cfg, run),
        Command::Curvature => commands::curvature(cfg, run, cli.seed),
        Command::Asymptotics => commands::asymptotics(cfg, run),
        Command::Functionals => commands::functionals(cfg, run),
        Command::Selftest => {
            log::info!("selftest on {threads} thread(s)");
            selftest::selftest(run, cli.seed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let cfg = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let threads = rayon::current_num_threads();
    let mut run = match Run::new(&cli.out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = execute(&cli, &cfg, &mut run, threads);
    let (error, code) = match &outcome {
        Ok(()) => (None, if run.pass() { 0 } else { EXIT_FAILED }),
        Err(e) => (Some(format!("{e:#}")), if is_numerical(e) { EXIT_FAILED } else { EXIT_USAGE }),
    };
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        tool: "dilab",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        threads,
        seed: cli.seed,
        pass: code == 0,
        error: error.clone(),
        checks: run.checks.clone(),
        artifacts: run.artifacts.clone(),
    };
    for c in &run.checks {
        println!("{} {}: {:.6e} (threshold {:.3e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    if let Err(e) = run.finish(summary) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::from(code)
}
