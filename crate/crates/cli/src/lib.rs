//! Config-driven front end for the bipotential toolkit.
//!
//! Each command reads a [`RunConfig`], writes CSV artifacts plus
//! `summary.txt`/`summary.json` into the output directory, and maps its
//! outcome to an exit code: 0 pass, 1 verification failure, 2 config or
//! usage error, 3 internal error.

pub mod commands;
pub mod config;
pub mod summary;

use std::fmt;
use std::path::Path;

pub use config::{Overrides, RunConfig};
pub use summary::RunSummary;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Internal(String),
}

impl CliError {
    pub fn from_core(e: bipotential::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Conjugate,
    Synth,
    Verify,
    Minimax,
    FanCheck,
    Graph,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Conjugate => "conjugate",
            Command::Synth => "synth",
            Command::Verify => "verify",
            Command::Minimax => "minimax",
            Command::FanCheck => "fan-check",
            Command::Graph => "graph",
        }
    }
}

/// Loads the config, applies overrides, runs the command and writes the
/// summary files.
pub fn run(command: Command, config_path: &Path, overrides: &Overrides) -> Result<RunSummary, CliError> {
    let mut cfg = RunConfig::load(config_path)?;
    cfg.apply(overrides);
    run_config(command, &cfg)
}

pub fn run_config(command: Command, cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut summary = RunSummary::new(command.name(), dir);
    match command {
        Command::Conjugate => commands::cmd_conjugate(cfg, &mut summary)?,
        Command::Synth => commands::cmd_synth(cfg, &mut summary)?,
        Command::Verify => commands::cmd_verify(cfg, &mut summary)?,
        Command::Minimax => commands::cmd_minimax(cfg, &mut summary)?,
        Command::FanCheck => commands::cmd_fan_check(cfg, &mut summary)?,
        Command::Graph => commands::cmd_graph(cfg, &mut summary)?,
    }
    summary.write()?;
    Ok(summary)
}

/// Exit code for a finished run.
pub fn exit_code(result: &Result<RunSummary, CliError>) -> i32 {
    match result {
        Ok(s) if s.passed() => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(e) => e.exit_code(),
    }
}
