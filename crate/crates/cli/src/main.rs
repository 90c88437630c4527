//! `twinlab run | verify | version`.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use run::RunError;

const EXIT_ANALYSIS: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "twinlab", about = "Build martensitic microstructures and measure them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured construction and run its analyses.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long, env = "TWINLAB_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Check a config without computing anything.
    Verify { config: PathBuf },
    Version,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Version => {
            println!("twinlab {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Verify { config } => {
            let (cfg, _) = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let violations = cfg.validate();
            println!("{}", serde_json::to_string_pretty(&violations).expect("violations serialize"));
            if violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CONFIG)
            }
        }
        Command::Run { config, output_dir } => {
            let (cfg, text) = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let dir = output_dir
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("twinlab-out"));
            match run::run(&cfg, &text, &dir) {
                Ok(out) => {
                    println!("wrote {} files to {}", out.manifest.outputs.len() + 1, out.root().display());
                    ExitCode::SUCCESS
                }
                Err(RunError::Invalid(violations)) => {
                    for v in violations {
                        eprintln!("invalid config: {}: {}", v.field, v.message);
                    }
                    ExitCode::from(EXIT_CONFIG)
                }
                Err(RunError::Analysis(n)) => {
                    eprintln!("{n} analysis run(s) failed; see {}", dir.join("manifest.json").display());
                    ExitCode::from(EXIT_ANALYSIS)
                }
                Err(RunError::Io(e)) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_ANALYSIS)
                }
            }
        }
    }
}

fn config_error(e: anyhow::Error) -> ExitCode {
    eprintln!("invalid config: {e:#}");
    ExitCode::from(EXIT_CONFIG)
}
