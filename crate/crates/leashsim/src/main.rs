//! Command-line front end: run one traced episode or a seeded batch.
//!
//! Exit codes: 0 success, 1 configuration error, 2 simulation fault.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use leashsim::batch::{prepare_out_dir, run_batch, write_summary_csv, BatchConfig};
use leashsim::episode::{run_episode_traced, TraceSink};
use leashsim::scenario::{Condition, Scenario};

#[derive(Parser)]
#[command(name = "leashsim", version, about = "Leash-guided redirected walking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the scenario's simulation rate (steps per second).
    #[arg(long, global = true)]
    hz: Option<f64>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode.
    Simulate {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Write a per-frame JSONL trace to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run paired seeded episodes and write summary.csv.
    Batch {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Episodes per condition.
        #[arg(long)]
        runs: usize,
        /// Comma-separated list: guided,unguided.
        #[arg(long, default_value = "guided,unguided")]
        conditions: String,
        /// Output directory for summary.csv.
        #[arg(long)]
        out: PathBuf,
        /// Base seed; episode i uses base + i.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Run episodes one at a time instead of in parallel.
        #[arg(long)]
        serial: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> leashsim::Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, seed, trace } => {
            let mut scenario = Scenario::load(&config)?;
            if let Some(hz) = cli.hz {
                scenario.run.hz = hz;
                scenario.validate()?;
            }
            let result = match trace {
                Some(path) => {
                    let mut file = fs::File::create(path)?;
                    run_episode_traced(&scenario, seed, TraceSink::Writer(&mut file))?
                }
                None => run_episode_traced(&scenario, seed, TraceSink::None)?,
            };
            if !cli.quiet {
                println!("{}", serde_json::to_string_pretty(&result)?);
            }
            if result.fault {
                eprintln!("simulation fault: user escaped the tracked space");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch {
            config,
            runs,
            conditions,
            out,
            seed,
            serial,
        } => {
            let mut scenario = Scenario::load(&config)?;
            if let Some(hz) = cli.hz {
                scenario.run.hz = hz;
                scenario.validate()?;
            }
            let conditions = conditions
                .split(',')
                .map(Condition::parse)
                .collect::<leashsim::Result<Vec<_>>>()?;
            // Fail on an unwritable output path before any simulation starts.
            prepare_out_dir(&out)?;
            let cfg = BatchConfig {
                runs,
                base_seed: seed,
                conditions,
                parallel: !serial,
            };
            let output = run_batch(&scenario, &cfg)?;
            write_summary_csv(&out, &output)?;
            if !cli.quiet {
                for s in &output.summaries {
                    println!(
                        "{:<9} n={:<4} bips {:>6.2} +- {:<6.2} completed {:>5.1}%  time {:>7.2} +- {:<6.2} rc_mean {:.3}",
                        s.condition.as_str(),
                        s.episodes,
                        s.bips.mean,
                        s.bips.std,
                        s.completion_rate * 100.0,
                        s.completion_time.mean,
                        s.completion_time.std,
                        s.mean_rc_error.mean,
                    );
                }
                println!("wrote {}", out.join("summary.csv").display());
            }
            let any_fault = output.rows.iter().any(|r| r.fault);
            if any_fault {
                eprintln!("simulation fault: at least one episode aborted");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
