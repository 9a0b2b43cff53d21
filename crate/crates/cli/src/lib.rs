//! Library side of the `xcisim` command: configuration, result files and the
//! subcommand implementations.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// Scenario failures surfaced after all outputs were written.
#[derive(Debug)]
pub struct RunFailed {
    pub numeric: bool,
    pub message: String,
}

impl fmt::Display for RunFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunFailed {}

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// 3 for numerical failures (overflow, divergence, no convergence), 2 for
/// everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<xcisim::Error>() {
            return if e.is_numeric() { EXIT_NUMERIC } else { EXIT_VALIDATION };
        }
        if let Some(f) = cause.downcast_ref::<RunFailed>() {
            return if f.numeric { EXIT_NUMERIC } else { EXIT_VALIDATION };
        }
    }
    EXIT_VALIDATION
}
