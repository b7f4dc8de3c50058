//! Command-line front end: configuration, commands, output files with
//! provenance, and gnuplot scripts.

pub mod commands;
pub mod config;
pub mod output;
pub mod plots;

use std::fmt;

use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Error reported to the user with the exit code it maps to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub code: i32,
    pub module: String,
    pub message: String,
}

impl CliError {
    pub fn config(module: &str, message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, module: module.into(), message: message.into() }
    }

    pub fn solver(module: &str, message: impl Into<String>) -> Self {
        Self { code: EXIT_SOLVER, module: module.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::solver("cli", format!("cannot write {}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.module, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<semispec::Error> for CliError {
    fn from(e: semispec::Error) -> Self {
        let code = if e.is_input_error() { EXIT_CONFIG } else { EXIT_SOLVER };
        Self { code, module: e.module.to_string(), message: e.kind.to_string() }
    }
}
