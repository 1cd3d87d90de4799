//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use abc_gbi::calibration::match_exponential_to_uniform;
use abc_gbi::cli::{build_report, calibrate_config_file, render_text, run_config_file};
use abc_gbi::Error;

#[derive(Parser)]
#[command(name = "abc-gbi", version, about = "Discrepancy-based Bayesian inference experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Write artifacts here instead of the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Summarize a finished experiment directory.
    Report {
        dir: PathBuf,
        /// Emit machine-readable JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run only the calibration block of a config.
    Calibrate {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Match the Exponential kernel to a uniform kernel with threshold
    /// epsilon.
    MatchKernel {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        json: bool,
    },
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cli: Cli) -> abc_gbi::Result<()> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let out = run_config_file(&config, output_dir.as_deref())?;
            println!("wrote artifacts to {}", out.display());
            Ok(())
        }
        Command::Report { dir, json } => {
            let report = build_report(&dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", render_text(&report));
            }
            Ok(())
        }
        Command::Calibrate { config, output_dir } => {
            let (out, report) = calibrate_config_file(&config, output_dir.as_deref())?;
            println!("calibration (written to {}):", out.display());
            println!("  m*        = {}", report.m_star);
            println!("  sd*       = {}", report.sd_star);
            println!("  delta0    = {}", report.delta0);
            println!("  epsilon   = {}", report.epsilon);
            println!("  eps - d0  = {}", report.epsilon_std);
            println!("  h         = {}", report.h);
            println!("  w = 1/h   = {}", report.w);
            Ok(())
        }
        Command::MatchKernel { epsilon, json } => {
            let result = match_exponential_to_uniform(epsilon)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&result)?);
            } else {
                println!("h/epsilon ratio = {}", result.ratio_a);
                println!("matched h       = {}", result.h);
                println!("L1 objective    = {}", result.objective_value);
                println!("iterations      = {}", result.iterations);
            }
            Ok(())
        }
    }
}
