//! `microgrid`: sizing and year-long dispatch simulation of an isolated
//! diesel/PV/battery microgrid.

mod artifacts;
mod commands;
mod config;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Loaded, Overrides};
use microgrid::sizing::SizingError;

/// Process exit status; a stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    /// Configuration, input or I/O error.
    Failure = 1,
    Infeasible = 2,
    /// Gap, node or time limit reached (with or without an incumbent).
    Limit = 3,
    /// The simulation shed load.
    Shed = 4,
}

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  configuration, input or I/O error
  2  sizing problem infeasible
  3  solver stopped at the gap, node or time limit
  4  simulation shed load

Environment variables MGRID_<SECTION>_<KEY> override configuration keys,
e.g. MGRID_COSTS_FUEL_PRICE=1.2 or MGRID_CATALOG_BESS_MAX_ENERGY_KWH=8000.
Command-line flags override both.";

#[derive(Debug, Parser)]
#[command(name = "microgrid", version, about = "Size and simulate an isolated diesel/PV/battery microgrid", after_help = EXIT_CODES)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `out` or ./out.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Top-level random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative optimality gap of the sizing solve.
    #[arg(long, global = true)]
    gap: Option<f64>,
    /// Wall-clock limit of each sizing solve, seconds. Runs stopped by it
    /// are not reproducible; prefer `solve.node_limit`.
    #[arg(long, global = true, value_name = "SECONDS")]
    time_limit: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the sizing problem and write decision.toml, sizing.toml and schedule.csv.
    Size,
    /// Simulate a decision over the simulation horizon and write steps.csv,
    /// report.toml, occupancy.csv, daily_soc.csv and plant.toml.
    Simulate {
        /// Decision file; defaults to [simulation] decision, then <out>/decision.toml.
        #[arg(long, value_name = "FILE")]
        decision: Option<PathBuf>,
    },
    /// Print the totals of a run directory, checked against its CSV files.
    Report {
        /// Run directory; defaults to the output directory.
        dir: Option<PathBuf>,
    },
}

fn exit_for(err: &anyhow::Error) -> Exit {
    match err.chain().find_map(|e| e.downcast_ref::<SizingError>()) {
        Some(SizingError::Infeasible { .. }) => Exit::Infeasible,
        Some(SizingError::NoIncumbent(_)) => Exit::Limit,
        _ => Exit::Failure,
    }
}

fn execute(cli: Cli, stdout: &mut impl Write) -> anyhow::Result<Exit> {
    let flags = Overrides { out: cli.out.clone(), seed: cli.seed, gap: cli.gap, time_limit: cli.time_limit };
    let load = || -> anyhow::Result<Loaded> {
        let path = cli.config.as_deref().ok_or_else(|| anyhow::anyhow!("--config is required"))?;
        Loaded::from_file(path, &flags)
    };
    match &cli.command {
        Command::Size => commands::size(&load()?, stdout),
        Command::Simulate { decision } => commands::simulate(&load()?, decision.as_deref(), stdout),
        Command::Report { dir } => {
            let dir = match (dir, &cli.out, &cli.config) {
                (Some(d), _, _) => d.clone(),
                (None, Some(o), _) => o.clone(),
                (None, None, Some(_)) => load()?.out,
                (None, None, None) => PathBuf::from("out"),
            };
            commands::report(&dir, stdout)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Failure as u8 } else { Exit::Ok as u8 });
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match execute(cli, &mut out) {
        Ok(code) => code,
        Err(err) => {
            let _ = out.flush();
            eprintln!("error: {err:#}");
            exit_for(&err)
        }
    };
    ExitCode::from(code as u8)
}
