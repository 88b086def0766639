//! Command-line front end for the UAV network simulator.
//!
//! Every command is fully determined by its config file and `--seed`;
//! `--sequential` changes scheduling only, never results. Errors print a
//! one-line JSON object on stderr and exit nonzero so scripted callers
//! can branch on them.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use uavsim_core::allocation::verify_allocation;
use uavsim_core::cache::verify_cache;
use uavsim_core::config::{load_config, SimConfig};
use uavsim_core::marl::{run_episode_seeded, Algorithm};
use uavsim_core::metrics::{write_run_dir, EpisodeSummary};
use uavsim_core::predictor::run_prediction_benchmark;
use uavsim_core::sweep::{link_rate_report, run_sweep, search_count_report, SweepAxis};

#[derive(Parser)]
#[command(
    name = "uavsim",
    version,
    about = "Seeded simulator of cache-enabled UAV networks sharing licensed and unlicensed spectrum"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run single-threaded. Results are identical either way.
    #[arg(long)]
    sequential: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<SimConfig> {
        let cfg = match &self.config {
            Some(path) => {
                load_config(path).with_context(|| format!("loading config {}", path.display()))?
            }
            None => SimConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn parallel(&self) -> bool {
        !self.sequential
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one learning episode and print its summary as JSON.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Learning algorithm driving the UAV agents.
        #[arg(long, default_value = "lsm")]
        algorithm: Algorithm,
        /// Override the configured iteration count.
        #[arg(long)]
        iterations: Option<usize>,
        /// Directory for run artifacts (config.toml, metrics.csv,
        /// rate_cdf.csv, summary.json, seed.txt).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one config axis over several seeds and print a CSV.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis to vary: uavs, users, cache-size, duty-cycle, fronthaul-scale.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Number of seeds (0..N), each offset from --seed.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value = "lsm")]
        algorithm: Algorithm,
        /// File for the CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the spiking predictor against the echo-state baseline.
    PredictBench {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Cross-check the band-splitting allocator against its exhaustive
    /// oracle on random instances. Exits 2 on any mismatch.
    AllocVerify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 8)]
        max_users: usize,
    },
    /// Cross-check the cache planner against its exhaustive oracle on
    /// random instances. Exits 2 on any mismatch.
    CacheVerify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 6)]
        max_users: usize,
        #[arg(long, default_value_t = 12)]
        max_contents: usize,
    },
    /// Print the link-rate report across fronthaul bandwidth scales.
    LinkRates {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated fronthaul bandwidth multipliers.
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0])]
        scales: Vec<f64>,
    },
    /// Print mean search effort of the allocator vs the oracle by
    /// instance size.
    SearchCounts {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 8)]
        max_users: usize,
    },
}

fn emit<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            common,
            algorithm,
            iterations,
            out,
        } => {
            let mut cfg = common.load()?;
            if let Some(n) = iterations {
                cfg.rl.iterations = n;
                cfg.validate()?;
            }
            let result = run_episode_seeded(&cfg, common.seed, algorithm, common.parallel())?;
            if let Some(dir) = &out {
                write_run_dir(dir, &cfg, &result)?;
            }
            emit(&EpisodeSummary::from_result(&result))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            common,
            axis,
            values,
            seeds,
            algorithm,
            out,
        } => {
            let cfg = common.load()?;
            let seed_list: Vec<u64> = (0..seeds as u64).map(|s| common.seed + s).collect();
            let report = run_sweep(
                &cfg,
                axis,
                &values,
                &seed_list,
                algorithm,
                common.parallel(),
            )?;
            let csv = report.to_csv();
            match &out {
                Some(path) => std::fs::write(path, csv)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::PredictBench { common } => {
            let cfg = common.load()?;
            let outcome = run_prediction_benchmark(&cfg, common.seed, common.parallel())?;
            emit(&outcome)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::AllocVerify {
            common,
            instances,
            max_users,
        } => {
            let report = verify_allocation(instances, max_users, common.seed, common.parallel())?;
            emit(&report)?;
            Ok(if report.mismatches.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::CacheVerify {
            common,
            instances,
            max_users,
            max_contents,
        } => {
            let report = verify_cache(
                instances,
                max_users,
                max_contents,
                common.seed,
                common.parallel(),
            )?;
            emit(&report)?;
            Ok(if report.mismatches.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::LinkRates { common, scales } => {
            let cfg = common.load()?;
            let report = link_rate_report(&cfg, common.seed, &scales)?;
            print!("{}", report.to_csv());
            Ok(ExitCode::SUCCESS)
        }
        Command::SearchCounts {
            common,
            instances,
            max_users,
        } => {
            let cfg = common.load()?;
            let report =
                search_count_report(common.seed, instances, max_users, cfg.run.selection_cap)?;
            print!("{}", report.to_csv());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            let payload = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
