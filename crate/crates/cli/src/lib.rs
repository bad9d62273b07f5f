//! Pipeline behind the `mgs` command: manifests, experiment drivers and
//! artifact writing.

pub mod artifacts;
pub mod manifest;
pub mod pipeline;

use mgs_core::formulation::FormulationError;
use thiserror::Error;

pub use manifest::{Experiment, RunManifest};
pub use pipeline::{CompareReport, InfeasibilityReport, SolarRow, WindowRow};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input error: {0}")]
    Ingest(String),
    #[error("infeasible; balance rows {:?}, solver rows {:?}", .0.balance_rows, .0.solver_rows)]
    Infeasible(InfeasibilityReport),
    #[error("{0}")]
    Limit(String),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("{0}")]
    Other(String),
}

impl PipelineError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Ingest(_) => 2,
            PipelineError::Infeasible(_) => 3,
            PipelineError::Limit(_) => 4,
            PipelineError::Formulation(FormulationError::InvalidConfig(_) | FormulationError::ScenarioMismatch(_)) => 2,
            PipelineError::Formulation(FormulationError::InvalidOptions(_)) => 2,
            PipelineError::Formulation(FormulationError::Status(mgs_core::LpStatus::Infeasible)) => 3,
            PipelineError::Formulation(FormulationError::Status(mgs_core::LpStatus::Limit)) => 4,
            _ => 1,
        }
    }
}
