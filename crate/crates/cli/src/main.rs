//! `spqm`: experiment runner for the SPQM library.
//!
//! Exit status: 0 on success, 1 on a failed check or runtime error, 2 on a
//! usage error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::{json, Value};
use spqm::SpqmError;

use crate::commands::{Outcome, PovmArgs, SimulateArgs, SweepArgs, VerifyArgs};
use crate::config::{CommonArgs, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spqm(#[from] SpqmError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Parser, Debug)]
#[command(name = "spqm", version, about = "Simultaneous P&Q measurement: simulations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample paths, integrate both charts and cross-check the closed forms.
    Simulate(SimulateArgs),
    /// Kernel, Riccati and closed-form moment sweep.
    Moments(SweepArgs),
    /// Σ, N_T, densities and weighted Monte Carlo over a κT grid.
    Distributions(SweepArgs),
    /// Partition identity, completeness quadrature and channel Monte Carlo.
    Povm(PovmArgs),
    /// Run the acceptance suite; exit 1 if any check fails.
    Verify(VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Moments(_) => "moments",
            Command::Distributions(_) => "distributions",
            Command::Povm(_) => "povm",
            Command::Verify(_) => "verify",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a) => &a.common,
            Command::Moments(a) | Command::Distributions(a) => &a.common,
            Command::Povm(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }
}

pub fn metadata(subcommand: &str, cfg: &ExperimentConfig, extra: &Value) -> Value {
    json!({
        "tool": "spqm",
        "version": spqm::VERSION,
        "subcommand": subcommand,
        "seed": cfg.seed,
        "parameters": cfg.to_json(),
        "details": extra,
        // Chunked reductions are combined in a fixed order.
        "parallel_reduction_tolerance": 0.0,
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(spqm::par::THREADS_ENV) else {
        return Ok(());
    };
    let n = spqm::par::threads_from_env()
        .ok_or_else(|| CliError::Usage(format!("{} must be a positive integer, got '{raw}'", spqm::par::THREADS_ENV)))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} workers: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cmd: &Command) -> Result<bool, CliError> {
    configure_threads()?;
    let need_dt = !matches!(cmd, Command::Moments(_));
    let cfg = cmd.common().resolve(need_dt)?;
    let Outcome { extra, table, passed } = match cmd {
        Command::Simulate(a) => commands::simulate(a, &cfg)?,
        Command::Moments(a) => commands::moments(a, &cfg)?,
        Command::Distributions(a) => commands::distributions(a, &cfg)?,
        Command::Povm(a) => commands::povm(a, &cfg)?,
        Command::Verify(a) => commands::verify(a, &cfg)?,
    };
    let meta = metadata(cmd.name(), &cfg, &extra);
    output::emit(cfg.out.as_deref(), &meta, &table, cfg.format)?;
    Ok(passed)
}

fn broken_pipe(err: &CliError) -> bool {
    let io = match err {
        CliError::Io(e) => Some(e.kind()),
        CliError::Csv(e) => match e.kind() {
            csv::ErrorKind::Io(e) => Some(e.kind()),
            _ => None,
        },
        _ => None,
    };
    io == Some(std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        // The reader went away (e.g. `| head`); nothing left to report.
        Err(err) if broken_pipe(&err) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            let usage = matches!(
                err,
                CliError::Usage(_)
                    | CliError::Spqm(SpqmError::Regime(_) | SpqmError::Contract(_) | SpqmError::InvalidDimension { .. })
            );
            if usage {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(cli.command.name()) {
                    eprintln!("\n{}\n\nFor more information, try '--help'.", sub.render_usage());
                }
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
