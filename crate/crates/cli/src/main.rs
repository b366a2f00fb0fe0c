use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;

use config::ExperimentConfig;
use error::CliError;

/// Recombination dynamics on finite product spaces: exact integration,
/// particle simulation and reachability.
#[derive(Debug, Parser)]
#[command(name = "recomb", version)]
struct Cli {
    /// Seed for every randomized step (overrides `particles.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a config and report the T0 verdict, classes and quotient.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Also print the config in canonical form.
        #[arg(long)]
        print_config: bool,
    },
    /// Integrate the master equation and write the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the N-particle system and compare it with the exact flow.
    Particle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Close a seed set of words under recombination.
    Reach {
        #[arg(long)]
        config: PathBuf,
        /// One word per line, letters separated by commas or spaces.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        target: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check {
            config,
            print_config,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::check(&cfg)?;
            if print_config {
                println!("{}", cfg.to_json());
            }
            Ok(())
        }
        Command::Simulate {
            config,
            t_end,
            dt,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = t_end {
                cfg.integrator.t_end = t;
            }
            if dt.is_some() {
                cfg.integrator.dt = dt;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            commands::simulate(&cfg)
        }
        Command::Particle { config, n, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(n) = n {
                cfg.particles.n = n;
            }
            if let Some(s) = cli.seed {
                cfg.particles.seed = s;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            commands::particle(&cfg)
        }
        Command::Reach {
            config,
            seeds,
            target,
        } => commands::reach(&ExperimentConfig::load(&config)?, &seeds, target.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
