//! `qg`: run simulations, evaluate norm budgets, and drive the built-in
//! verification suites from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure (solver guard, check failure,
//! unreadable artifact), 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod emit;

/// Failures are split by who has to act: `Config` means the invocation or a
/// config file must change, `Runtime` means the run itself went bad.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Config(_) => ExitCode::from(2),
            Failure::Runtime(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<qg_core::QgError> for Failure {
    fn from(e: qg_core::QgError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "qg",
    version,
    about = "Pseudo-spectral solver and analysis suite for dissipative surface transport",
    after_help = "QG_THREADS caps the number of worker threads used for \
                  independent jobs (parallel verification suites)."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time-step the equation from a configured initial state.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Validate and echo the canonical config without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// Solve the integral fixed-point form on the configured horizon.
    Picard {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Evaluate norm budgets, spectral radius, and decay fits on a stored
    /// trajectory.
    Analyze {
        /// Trajectory file produced by `run` or `picard`.
        #[arg(long)]
        traj: PathBuf,
        /// TOML analysis settings (norm indices, optional weighting).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for report.json and report.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run one or more built-in verification suites.
    Verify {
        /// Suite name; repeat for several. Independent suites run in
        /// parallel, capped by QG_THREADS.
        #[arg(long = "suite", required = true)]
        suites: Vec<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Tolerance override `check.name=value`; may only tighten the
        /// built-in threshold.
        #[arg(long = "tol")]
        tols: Vec<String>,
    },
    /// Print the header and norms of a stored snapshot or trajectory.
    InspectSnapshot {
        #[arg(long)]
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    // Die quietly when output is piped into something like `head` instead of
    // panicking on the closed pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config, dry_run } => commands::run(&config, dry_run),
        Cmd::Picard { config, dry_run } => commands::picard(&config, dry_run),
        Cmd::Analyze { traj, spec, out_dir } => commands::analyze(&traj, &spec, &out_dir),
        Cmd::Verify { suites, seed, tols } => commands::verify(&suites, seed, &tols),
        Cmd::InspectSnapshot { file } => commands::inspect(&file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}
