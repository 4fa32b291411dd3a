use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("feature {0} has zero variance in the training split")]
    ConstantFeature(usize),

    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse { line: u64, column: usize, reason: String },

    #[error("CSV header has no `label` column")]
    MissingLabelColumn,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {scores} scores vs {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("ROC analysis needs both classes present")]
    SingleClassInput,

    #[error("algorithm {algorithm} cannot run on a {tiers} topology")]
    TopologyMismatch {
        algorithm: &'static str,
        tiers: &'static str,
    },

    #[error("no bandwidth configured for link class `{0}`")]
    UnknownLinkClass(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage wrappers and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
