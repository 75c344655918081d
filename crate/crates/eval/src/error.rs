use headpose_core::alignment::AlignmentError;
use headpose_core::metrics::MetricError;
use headpose_core::opal::OpalError;
use headpose_core::so3::So3Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: row '{id}': {source}")]
    InvalidPose {
        path: String,
        line: usize,
        id: String,
        #[source]
        source: So3Error,
    },
    #[error("{path}:{line}: duplicate id '{id}' (first seen on line {first_line})")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
        first_line: usize,
    },
    #[error("{path}: no data rows")]
    EmptyInput { path: String },
    #[error("sample '{id}' has no prediction")]
    MissingPrediction { id: String },
    #[error("prediction id '{id}' does not appear in the ground truth")]
    UnmatchedPrediction { id: String },
    #[error("no samples to evaluate")]
    NoSamples,
    #[error("invalid bin specification: {0}")]
    BinSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("alignment failed: {0}")]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Opal(#[from] OpalError),
}

impl EvalError {
    /// CLI exit code: 2 for convergence failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            EvalError::Alignment(AlignmentError::NonConvergence { .. }) => 2,
            _ => 1,
        }
    }
}
