//! Command line front end. Exit status: 0 success, 1 audit failure, 2 input error.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

pub use commands::{execute, Outcome, RunReport, StageResult};
pub use config::{
    load_config, manifest_path, parse_config_text, BuiltKernel, Command, KernelConfig, Manifest,
    NumericConfig, RunConfig,
};

use crate::error::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_AUDIT_FAILED: u8 = 1;
pub const EXIT_INPUT_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "hypertorus", version, about = "Matrix-valued covariance kernels on sphere x sphere x R^d")]
pub struct Args {
    /// Run configuration (JSON), or a manifest written by an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, short)]
    pub verbose: bool,
}

/// Executes a configuration: writes the output and its manifest atomically.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate_paths()?;
    log::info!("{} with a {} kernel, seed {}", cfg.command_name(), cfg.kernel.family(), cfg.seed);
    let outcome = execute(cfg)?;
    crate::io::write_atomic(&cfg.io.output, &outcome.bytes)?;
    let manifest = Manifest {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
    };
    let mut m = serde_json::to_vec_pretty(&manifest)?;
    m.push(b'\n');
    crate::io::write_atomic(&manifest_path(&cfg.io.output), &m)?;
    Ok(outcome)
}

/// Loads, applies flag overrides and runs; returns the process exit code.
pub fn main_with_args(args: Args) -> u8 {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = load_config(&args.config).and_then(|mut cfg| {
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        run(&cfg).map(|o| (cfg, o))
    });
    match result {
        Ok((cfg, outcome)) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("wrote {}", cfg.io.output.display());
            if outcome.passed {
                EXIT_OK
            } else {
                eprintln!("audit failed");
                EXIT_AUDIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::AuditFailed { .. } => EXIT_AUDIT_FAILED,
        _ => EXIT_INPUT_ERROR,
    }
}

pub fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(if args.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    ExitCode::from(main_with_args(args))
}
