//! `gjms-lab`: batch driver for the GJMS experiments.
//!
//! Exit codes: 0 all checks passed, 2 tolerance failure, 3 configuration error,
//! 4 non-convergence, 1 I/O failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use commands::{build_config, run, Extras, Failure};
use config::{CommonArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "gjms-lab", version, about = "Numerical experiments for fractional GJMS operators on spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of spectral multipliers, expansions and gaps for l = 0..=L.
    Multipliers {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Residual of the integral equation for a centred bubble.
    VerifyBubble {
        #[command(flatten)]
        common: CommonArgs,
        /// Bubble amplitude; the constant-solution amplitude when omitted.
        #[arg(long)]
        amplitude: Option<f64>,
        /// Sample radius; repeat for a list.
        #[arg(long = "radius")]
        radii: Vec<f64>,
    },
    /// Minimize the perturbed Sobolev quotient for each --epsilon.
    Sobolev {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Moving-spheres threshold against sqrt(1 + |x|^2).
    MovingSpheres {
        #[command(flatten)]
        common: CommonArgs,
        /// |x| of the centre (placed on the first axis); repeat for a list.
        #[arg(long = "x-norm")]
        x_norms: Vec<f64>,
    },
    /// Re-run from an emitted `<subcommand>.config.json`.
    Replay {
        #[arg(long)]
        config: PathBuf,
        /// Output directory overriding the one in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(command: Command) -> Result<RunConfig, Failure> {
    let none = || Extras {
        amplitude: None,
        radii: Vec::new(),
        x_norms: Vec::new(),
    };
    match command {
        Command::Multipliers { common } => build_config("multipliers", common, none()),
        Command::VerifyBubble {
            common,
            amplitude,
            radii,
        } => build_config(
            "verify-bubble",
            common,
            Extras {
                amplitude,
                radii,
                x_norms: Vec::new(),
            },
        ),
        Command::Sobolev { common } => build_config("sobolev", common, none()),
        Command::MovingSpheres { common, x_norms } => build_config(
            "moving-spheres",
            common,
            Extras {
                amplitude: None,
                radii: Vec::new(),
                x_norms,
            },
        ),
        Command::Replay { config, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))
                .map_err(Failure::Io)?;
            let mut parsed: RunConfig =
                serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            if let Some(out) = out {
                parsed.out = out;
            }
            Ok(parsed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match resolve(cli.command).and_then(|config| run(&config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("gjms-lab: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
