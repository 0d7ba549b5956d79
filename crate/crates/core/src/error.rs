use thiserror::Error;

use crate::sdp::SolveResult;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (imaginary residue {residue:e})")]
    NotHermitian { residue: f64 },

    /// The Fisher information is singular: some parameter is unidentifiable
    /// from the echo, e.g. the beam radiates nothing toward the target.
    #[error("Fisher information matrix is singular (reciprocal condition {rcond:e})")]
    SingularFisher { rcond: f64 },

    #[error(
        "eavesdropping infeasible: required beampattern {required:e} exceeds the achievable {achievable:e}"
    )]
    EavesdropInfeasible { required: f64, achievable: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("solver finished with status {status:?}")]
    Solver { status: crate::sdp::SolveStatus },

    #[error("rank-one refinement did not reach the target ratio (best {ratio:.6})")]
    RankOneFailure { best: Box<SolveResult>, ratio: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
