use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a constitutive law or norm.
    #[error("{what} must be {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The requested time step exceeds the stability bound of a substep.
    #[error("{stage}: dt = {requested:e} exceeds the admissible {admissible:e}")]
    StepRejected {
        stage: &'static str,
        requested: f64,
        admissible: f64,
    },

    #[error("numerical blow-up in {stage} at index {index}")]
    NumericalBlowup { stage: &'static str, index: usize },

    #[error("tridiagonal breakdown in {stage}: pivot {pivot:e} at row {row}")]
    SolverBreakdown {
        stage: &'static str,
        row: usize,
        pivot: f64,
    },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config: {0}")]
    Validation(String),

    #[error("bad snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, requirement: &'static str, value: f64) -> Self {
        Error::Domain {
            what,
            requirement,
            value,
        }
    }

    /// True for the error classes the driver reports as a validation failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ConfigParse(_) | Error::Validation(_) | Error::Domain { .. } | Error::DegenerateInput(_)
        )
    }

    /// True for failures of the numerical scheme itself.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalBlowup { .. } | Error::SolverBreakdown { .. } | Error::StepRejected { .. }
        )
    }
}
