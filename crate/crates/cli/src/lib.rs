//! Config-driven experiment runner behind the `qmem` binary.
//!
//! Exit codes: 0 ok, 1 bad config, 2 infeasible parameters, 3 runtime
//! failure.

pub mod config;
pub mod plot;
pub mod run;

use thiserror::Error;

use qmem::bounds::BoundsError;
use qmem::clock::ClockError;
use qmem::code::CodeError;
use qmem::memory::MemoryError;
use qmem::oracle::OracleError;

pub use config::{Experiment, ExperimentConfig, Format};
pub use run::{run_experiment, RunOutput};

pub const SUBCOMMANDS: [&str; 7] = [
    "clock-verify",
    "decode-table",
    "bp-curve",
    "memory-sim",
    "lifetime-scan",
    "ledger",
    "oracle-check",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("invalid config field {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse(_) | Self::Invalid { .. } => 1,
            Self::Infeasible(_) => 2,
            Self::Runtime(_) | Self::Io { .. } => 3,
        }
    }
}

impl From<MemoryError> for CliError {
    fn from(e: MemoryError) -> Self {
        match e {
            MemoryError::InvalidParam { name, .. } => Self::Invalid {
                field: name.into(),
                reason: e.to_string(),
            },
            MemoryError::ScheduleInfeasible(_) | MemoryError::FloorUnreachable(_) => {
                Self::Infeasible(e.to_string())
            }
            MemoryError::Bounds(b) => b.into(),
            MemoryError::Clock(c) => c.into(),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Infeasible => Self::Infeasible(e.to_string()),
            other => Self::Invalid {
                field: "parameters".into(),
                reason: other.to_string(),
            },
        }
    }
}

impl From<ClockError> for CliError {
    fn from(e: ClockError) -> Self {
        match e {
            ClockError::TooFewBits(_) | ClockError::EpsilonOutOfRange(_) | ClockError::NonPositive { .. } => {
                Self::Invalid {
                    field: "clock".into(),
                    reason: e.to_string(),
                }
            }
            ClockError::DegenerateWindow { .. } | ClockError::OverlappingWindows { .. } => {
                Self::Infeasible(e.to_string())
            }
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooManyQubits(_) | OracleError::InsufficientTrials { .. } | OracleError::BadRate(_) => {
                Self::Invalid {
                    field: "oracle".into(),
                    reason: e.to_string(),
                }
            }
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> Self {
        Self::Runtime(e.to_string())
    }
}
