//! File formats, configuration and the command pipelines behind the
//! `hypermeasure` binary.
// `!(a < b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use serde_json::Value;

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

pub use error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Default output directory when neither `--out` nor `output_dir` is set.
pub const OUT_DIR_ENV: &str = "HYPERMEASURE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pressure,
    Refmeasure,
    Evolve,
    Dim,
    Verify,
}

pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    /// Top-level config fields, applied in order.
    pub overrides: Vec<(String, Value)>,
    pub out: Option<PathBuf>,
}

/// Output directory: flag, then config, then the environment, then `.`.
fn output_dir(inv: &Invocation, cfg: &config::RunConfig) -> PathBuf {
    inv.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs one command and returns the files it wrote.
pub fn run(inv: &Invocation) -> Result<Vec<PathBuf>> {
    let cfg = config::load(inv.config.as_deref(), &inv.overrides)?;
    let dir = output_dir(inv, &cfg);
    let res = config::Resolved::new(cfg)?;
    let mut out = output::Outputs::new(dir)?;
    let status = match inv.command {
        Command::Pressure => commands::pressure(&res, &mut out),
        Command::Refmeasure => commands::refmeasure(&res, &mut out),
        Command::Evolve => commands::evolve(&res, &mut out),
        Command::Dim => commands::dim(&res, &mut out),
        Command::Verify => verify::verify(&res, &mut out),
    };
    status.map(|()| out.written)
}
