//! `ibckit` command-line front end.

mod commands;
mod error;
mod manifest;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "ibckit", version, about = "In-block controllable polytopes and PWL safety feedback")]
struct Cli {
    /// Directory for every output file and the manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunFlags {
    /// Integration step in seconds; overrides the scenario.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Run length in seconds; overrides the scenario.
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Controllability and the equilibrium/input-range decomposition.
    Analyze { system: PathBuf },
    /// Certify a polytope as in-block controllable.
    Check {
        system: PathBuf,
        polytope: PathBuf,
        /// Bounds `LO:HI` for one input; repeat once per input.
        #[arg(long = "input-box", value_name = "LO:HI", allow_hyphen_values = true)]
        input_box: Vec<String>,
        /// Accept the simplicial invariance test as sufficient under bounded inputs.
        #[arg(long)]
        assume_input_mild: bool,
    },
    /// Extend a polytope into an in-block controllable one.
    Construct {
        system: PathBuf,
        pbox: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Safe speed profile for one double-integrator axis.
    Profile {
        axis: PathBuf,
        /// Overrides the axis document's scaling factor.
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated velocity scale candidates.
        #[arg(long = "lambda-grid", value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
    },
    /// Closed-loop or steering run from a scenario document.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long = "input-box", value_name = "LO:HI", allow_hyphen_values = true)]
        input_box: Vec<String>,
        #[arg(long = "lambda-grid", value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
    },
    /// Planar obstacle avoidance with online region replanning.
    Avoid {
        scenario: PathBuf,
        /// Recorded obstacle positions `t,x,y`; overrides the scenario's obstacle.
        obstacle: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
}

fn run(cli: Cli, args: Vec<String>) -> Result<(), CliError> {
    let mut rec = manifest::Recorder::start();
    let out = cli.out.clone();
    let name = match cli.command {
        Command::Analyze { system } => {
            commands::analyze(&mut rec, &out, &system)?;
            "analyze"
        }
        Command::Check {
            system,
            polytope,
            input_box,
            assume_input_mild,
        } => {
            commands::check(&mut rec, &out, &system, &polytope, &input_box, assume_input_mild)?;
            "check"
        }
        Command::Construct { system, pbox, alpha } => {
            commands::construct(&mut rec, &out, &system, &pbox, alpha)?;
            "construct"
        }
        Command::Profile { axis, alpha, lambda_grid } => {
            commands::profile(&mut rec, &out, &axis, alpha, lambda_grid)?;
            "profile"
        }
        Command::Simulate {
            scenario,
            run,
            input_box,
            lambda_grid,
        } => {
            let overrides = scenario::Overrides {
                dt: run.dt,
                horizon: run.horizon,
                input_box,
                lambda_grid,
                seed: cli.seed,
            };
            scenario::simulate(&mut rec, &out, &scenario, &overrides)?;
            "simulate"
        }
        Command::Avoid { scenario, obstacle, run } => {
            scenario::avoid(&mut rec, &out, &scenario, obstacle.as_deref(), &run)?;
            "avoid"
        }
    };
    rec.finish(&out, name, &args, cli.seed)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IBCKIT_LOG", "warn")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(cli, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
