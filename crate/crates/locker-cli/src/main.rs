//! `locker`: command-line pipeline for parcel-locker yield management.
//!
//! Subcommands: `bench` synthesizes a workload directory, `ingest`
//! validates raw event logs, `train` materializes model artifacts, `plan`
//! runs forecast + dwell + optimization into reservation plans, `simulate`
//! replays admission policies against event streams, and `report`
//! aggregates results into plot-ready tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver
//! error, 5 replay error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use locker_core::synth::BenchParams;
use locker_core::LockerError;

use config::{FlagOverrides, Settings};

#[derive(Parser)]
#[command(name = "locker", version, about = "Parcel-locker yield management pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonFlags {
    /// JSON config file; its values override flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; stage seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Planning horizon in days.
    #[arg(long)]
    horizon: Option<u32>,
    /// Planning run date (day index; history is negative).
    #[arg(long)]
    run_date: Option<i32>,
    /// Worker threads for per-locker stages.
    #[arg(long)]
    workers: Option<usize>,
    /// Policies to simulate, in order; the first is the reference.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<String>>,
    /// Fraction of capacity held back by the admission guard.
    #[arg(long)]
    safety_margin: Option<f64>,
    /// Re-solve cadence: once, weekly, or daily.
    #[arg(long)]
    cadence: Option<String>,
}

impl CommonFlags {
    fn settings(&self) -> anyhow::Result<Settings> {
        let flags = FlagOverrides {
            run_date: self.run_date,
            horizon: self.horizon,
            seed: self.seed,
            workers: self.workers,
            policies: self.policy.clone(),
            safety_margin: self.safety_margin,
            cadence: self.cadence.clone(),
        };
        Settings::resolve(self.config.as_deref(), &flags)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate and sort a raw event log into an event store.
    Ingest {
        #[command(flatten)]
        common: CommonFlags,
        /// Raw event log to validate.
        #[arg(long)]
        events: PathBuf,
        /// Where to write the validated, sorted store.
        #[arg(long)]
        out: PathBuf,
        /// Drop offending records instead of aborting.
        #[arg(long)]
        skip_bad: bool,
    },
    /// Train forecast and dwell models and write the artifacts.
    Train {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long, default_value = "models")]
        out_dir: PathBuf,
    },
    /// Run the full planning pipeline and write per-locker plan files.
    Plan {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long, default_value = "plans")]
        out_dir: PathBuf,
    },
    /// Replay policies against eval streams and write comparative reports.
    Simulate {
        #[command(flatten)]
        common: CommonFlags,
        /// Directory holding plan files from `plan`.
        #[arg(long, default_value = "plans")]
        plans: PathBuf,
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
    /// Generate a synthetic benchmark directory.
    Bench {
        /// Benchmark seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Lockers per demand tier (low, medium, high).
        #[arg(long, default_value_t = 10)]
        lockers_per_tier: u32,
        /// Days of history before the planning day.
        #[arg(long, default_value_t = 140)]
        history_days: u32,
        /// Days in the evaluation window.
        #[arg(long, default_value_t = 15)]
        eval_days: u32,
        /// Fraction of demand drawn as Poisson noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value = "bench")]
        out_dir: PathBuf,
    },
    /// Aggregate simulation reports into plot-ready tables on stdout.
    Report {
        /// Directory holding `.summary.json` files from `simulate`.
        #[arg(long, default_value = "reports")]
        reports: PathBuf,
        /// Plans directory, for per-stage metrics.
        #[arg(long)]
        plans: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest {
            common,
            events,
            out,
            skip_bad,
        } => commands::cmd_ingest(&events, &out, &common.settings()?, skip_bad),
        Command::Train { common, out_dir } => commands::cmd_train(&common.settings()?, &out_dir),
        Command::Plan { common, out_dir } => commands::cmd_plan(&common.settings()?, &out_dir),
        Command::Simulate {
            common,
            plans,
            out_dir,
        } => commands::cmd_simulate(&common.settings()?, &plans, &out_dir),
        Command::Bench {
            seed,
            lockers_per_tier,
            history_days,
            eval_days,
            noise,
            out_dir,
        } => {
            let params = BenchParams {
                seed,
                lockers_per_tier,
                history_days,
                eval_days,
                demand_noise: noise,
            };
            commands::cmd_bench(&params, &out_dir)
        }
        Command::Report { reports, plans } => commands::cmd_report(&reports, plans.as_deref()),
    }
}

/// Distinct exit codes per failure class.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(le) = cause.downcast_ref::<LockerError>() {
            return match le {
                LockerError::InvalidConfig(_) | LockerError::Dimension(_) => 2,
                LockerError::InvalidEvent { .. }
                | LockerError::UnsortedStream { .. }
                | LockerError::Training(_)
                | LockerError::Parse { .. }
                | LockerError::Io(_) => 3,
                LockerError::Solver { .. } => 4,
                LockerError::Replay(_) => 5,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
