//! Batch front end: `kinetic validate` and `kinetic run`.

pub mod config;
pub mod run;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{validate, Diagnostic, ExperimentConfig, Severity};
pub use run::{run, RunOptions, RunReport};

use crate::error::KineticError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "kinetic", version, about = "Weak-coupling master-equation generators and exact reference checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for parameter sweeps.
        #[arg(long)]
        jobs: Option<usize>,
        /// Seed for `random` system and bath instances.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let text = fs::read_to_string(path).map_err(|e| {
        vec![Diagnostic {
            severity: Severity::Error,
            path: "$".into(),
            message: format!("cannot read {}: {e}", path.display()),
        }]
    })?;
    let cfg = ExperimentConfig::from_json(&text).map_err(|d| vec![d])?;
    let diags = validate(&cfg);
    for d in &diags {
        eprintln!("{d}");
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(Vec::new());
    }
    Ok(cfg)
}

/// Maps a run error to its exit code: numerical breakdowns exit with 2.
pub fn exit_code(e: &KineticError) -> i32 {
    match e {
        KineticError::Divergent { .. } | KineticError::NonFinite(_) | KineticError::Convergence(_) => EXIT_DIVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("ok");
                EXIT_OK
            }
            Err(diags) => {
                for d in diags {
                    eprintln!("{d}");
                }
                EXIT_VALIDATION
            }
        },
        Command::Run { config, out, jobs, seed } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(diags) => {
                    for d in diags {
                        eprintln!("{d}");
                    }
                    return EXIT_VALIDATION;
                }
            };
            let Some(out) = out.or_else(|| cfg.output.clone()) else {
                eprintln!("error: output: no --out given and no output directory in the configuration");
                return EXIT_VALIDATION;
            };
            match run(&cfg, &RunOptions { out: out.clone(), jobs, seed }) {
                Ok(report) => {
                    for f in &report.files {
                        println!("{}", out.join(&f.name).display());
                    }
                    for flag in &report.flags {
                        eprintln!("flag: {flag}");
                    }
                    if report.flags.is_empty() {
                        EXIT_OK
                    } else {
                        EXIT_DIVERGENCE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
    }
}

pub fn main() -> i32 {
    execute(Cli::parse())
}
