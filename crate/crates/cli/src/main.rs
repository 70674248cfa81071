//! `slicewass` command-line front end.
//!
//! Exit codes: 0 success, 1 an experiment assertion failed, 2 parse or
//! argument error, 3 dimension mismatch, 4 solver failure or exhausted
//! budget. Every failure prints one diagnostic line on stderr.
//!
//! Option precedence: explicit flag, then `--config` file, then built-in
//! default.

mod args;
mod commands;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ConfigFile};

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<slicewass::Error> for CliError {
    fn from(e: slicewass::Error) -> Self {
        use slicewass::Error as E;
        let code = match &e {
            E::DimensionMismatch { .. } => 3,
            E::SolverFailure(_) | E::BudgetExceeded(_) | E::ProblemTooLarge { .. } | E::DegenerateInstance(_) => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::parse(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("invalid config {}: {e}", path.display())))
}

fn run(cli: Cli) -> CliResult<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::parse("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::parse(format!("cannot configure thread pool: {e}")))?;
    }
    match cli.command {
        Command::Dist(a) => {
            let cfg = load_config(a.common.config.as_deref())?;
            commands::dist(&a, &cfg)
        }
        Command::Rates(a) => {
            let cfg = load_config(a.common.config.as_deref())?;
            commands::rates(&a, &cfg)
        }
        Command::Audit(a) => {
            let cfg = load_config(a.common.config.as_deref())?;
            commands::audit(&a, &cfg)
        }
        Command::Cdscan(a) => {
            let cfg = load_config(a.common.config.as_deref())?;
            commands::cdscan(&a, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("slicewass: error: {}", e.message.replace('\n', " "));
            ExitCode::from(e.code)
        }
    }
}
