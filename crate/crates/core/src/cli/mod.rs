//! File formats and subcommands behind the `flywheel-soc` binary.
//!
//! Kept in the library so the formats can be exercised without spawning a
//! process. Exit codes: 0 success, 1 validation, 2 I/O, 3 bound violation
//! under `bound --check`.

mod commands;
mod config;
mod emit;
mod profile;

pub use commands::{run, simulate_with_engine, Command, Outcome};
pub use config::{apply_config_text, params_from_values, ConfigValues, CONFIG_KEYS};
pub use emit::{format_number, parse_trace_csv, Cell, OutputFormat, Table};
pub use profile::{load_profile, parse_profile};

use std::path::PathBuf;

use crate::error::Error;
use crate::model::FlywheelParams;
use crate::oracle::OracleConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_BOUND_VIOLATION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Model(#[from] Error),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(_) | CliError::Parse { .. } | CliError::Validation(_) => {
                EXIT_VALIDATION
            }
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Which model produces the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Engine {
    Exact,
    ApproxFull,
    ApproxTruncated,
    Baseline,
    OdeOracle,
    PhysicalOracle,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::ApproxFull => "approx-full",
            Engine::ApproxTruncated => "approx-truncated",
            Engine::Baseline => "baseline",
            Engine::OdeOracle => "ode-oracle",
            Engine::PhysicalOracle => "physical-oracle",
        }
    }

    pub fn approx_mode(self) -> Option<crate::approx::ApproxMode> {
        match self {
            Engine::ApproxFull => Some(crate::approx::ApproxMode::Full),
            Engine::ApproxTruncated => Some(crate::approx::ApproxMode::Truncated),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: FlywheelParams,
    pub engine: Engine,
    pub clamp: bool,
    pub output_format: OutputFormat,
    pub oracle: OracleConfig,
}
