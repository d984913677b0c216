use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chemhapto",
    version,
    about = "Finite-volume simulator and estimate monitor for a 2D chemotaxis-haptotaxis system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Run {
        /// Path to a `key = value` config file.
        config: PathBuf,
    },
    /// Run the self-verification suite.
    Verify,
    /// Run independent simulations over a list of parameter values.
    Sweep {
        config: PathBuf,
        /// Model coefficient to vary: chi, xi or mu.
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run the manufactured-solution convergence studies.
    Mms,
}

fn out_root() -> Option<PathBuf> {
    std::env::var_os("CHEMHAPTO_OUT").map(PathBuf::from)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    let outcome = match cli.command {
        Command::Run { config } => {
            chemhapto::commands::cmd_run(&config, out_root().as_deref()).map(|summary| {
                println!(
                    "run complete: {} records, outputs in {}",
                    summary.records.len(),
                    summary.out_dir.display()
                );
                if let Some(verdicts) = &summary.verdicts {
                    for v in verdicts {
                        println!("  {:<12} bounded={}", v.quantity, v.bounded);
                    }
                }
                true
            })
        }
        Command::Verify => chemhapto::commands::cmd_verify(&mut stdout),
        Command::Sweep {
            config,
            param,
            values,
        } => chemhapto::commands::cmd_sweep(&config, &param, &values, out_root().as_deref()),
        Command::Mms => chemhapto::commands::cmd_mms(&mut stdout),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
