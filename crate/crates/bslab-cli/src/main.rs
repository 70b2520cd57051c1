//! `bslab`: scans, zero searches, identity checks and factorizations of the
//! modified Fredholm determinant, driven by a TOML run configuration.
//!
//! Exit codes: 0 success, 1 a check failed or was inconclusive, 2 bad
//! configuration or environment, 3 numerical failure.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use bslab::BsError;
use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "bslab", version, about = "Modified Fredholm determinants of radial Birman-Schwinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML).
    config: PathBuf,
    /// Output file; overrides output.path. Standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. --set numerics.quad_n=120 (repeatable).
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// psi and its factors on the configured k grid (CSV).
    Scan(Common),
    /// Zeros of psi in the search rectangle (JSON).
    Eigs(Common),
    /// Trace identities and bounds listed in task.identities (JSON).
    Verify(Common),
    /// Inner-outer factorization with probe residuals (JSON).
    Factorize(Common),
    /// Norms, moments and the normalized configuration (JSON).
    Info(Common),
}

type Action = fn(&RunConfig) -> Result<commands::Outcome, BsError>;

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("BSLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("BSLAB_THREADS={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn numeric_exit(err: &BsError) -> u8 {
    match err {
        BsError::InvalidArgument(_) | BsError::Unsupported(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn run(cli: Cli) -> Result<bool, (u8, String)> {
    configure_threads().map_err(|e| (EXIT_CONFIG, e))?;
    let (common, action): (&Common, Action) = match &cli.command {
        Command::Scan(c) => (c, commands::scan),
        Command::Eigs(c) => (c, commands::eigs),
        Command::Verify(c) => (c, commands::verify),
        Command::Factorize(c) => (c, commands::factorize),
        Command::Info(c) => (c, commands::info),
    };
    let mut cfg = RunConfig::load(&common.config, &common.overrides).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    if let Some(out) = &common.out {
        cfg.output.path = Some(out.clone());
    }
    let outcome = action(&cfg).map_err(|e| (numeric_exit(&e), e.to_string()))?;
    let write_err = |p: &std::path::Path, e: std::io::Error| (EXIT_CONFIG, format!("cannot write {}: {e}", p.display()));
    for (path, text) in &outcome.extra {
        output::emit(Some(path), text).map_err(|e| write_err(path, e))?;
    }
    let main_path = cfg.output.path.as_deref();
    output::emit(main_path, &outcome.text).map_err(|e| write_err(main_path.unwrap_or(std::path::Path::new("<stdout>")), e))?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err((code, msg)) => {
            eprintln!("bslab: {msg}");
            ExitCode::from(code)
        }
    }
}
