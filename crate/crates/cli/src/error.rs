//! Failures and their exit codes.

use std::io;
use std::path::Path;

use lienard_lab::lienard::LienardError;
use lienard_lab::models::ModelError;
use lienard_lab::rg::RgError;
use lienard_lab::sim::SimError;
use lienard_lab::sweep::SweepError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("integration failed: {0}")]
    Integrator(SimError),
    #[error("unsupported truncation: {0}")]
    Unsupported(String),
    #[error("no boundary: {0}")]
    NoBoundary(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::InvalidModel(_) => 2,
            CliError::Integrator(_) => 3,
            CliError::Unsupported(_) => 4,
            CliError::NoBoundary(_) => 5,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParams(_) | ModelError::UnknownParameter { .. } | ModelError::UnknownModel(_) => {
                CliError::Usage(e.to_string())
            }
            ModelError::MismatchBeyondTolerance { .. } | ModelError::Lienard(_) => CliError::InvalidModel(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            e => CliError::Integrator(e),
        }
    }
}

impl From<LienardError> for CliError {
    fn from(e: LienardError) -> Self {
        CliError::InvalidModel(e.to_string())
    }
}

impl From<RgError> for CliError {
    fn from(e: RgError) -> Self {
        match e {
            RgError::UnsupportedTruncation { .. } => CliError::Unsupported(e.to_string()),
            RgError::InvalidLambda(_) => CliError::Usage(e.to_string()),
            RgError::NonPositiveOmega(_) => CliError::InvalidModel(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::NoSignChange => CliError::NoBoundary(e.to_string()),
            SweepError::Model(m) => m.into(),
            SweepError::Io(source) => CliError::Io {
                path: "sweep output".into(),
                source,
            },
            SweepError::UnknownParameter { .. }
            | SweepError::InvalidAxis(_)
            | SweepError::EmptyPayload
            | SweepError::ThreadPool(_) => CliError::Usage(e.to_string()),
        }
    }
}
