use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("subject {subject}, visit {visit}: expected a {expected}x{expected} network, found {rows}x{cols}")]
    NodeCount {
        subject: usize,
        visit: usize,
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("subject {subject}, visit {visit}: network is not symmetric at entry ({row}, {col}): {upper} != {lower}")]
    Asymmetric {
        subject: usize,
        visit: usize,
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("subject {subject}, visit {visit}: diagonal entry {node} is {value}, expected 0")]
    NonzeroDiagonal {
        subject: usize,
        visit: usize,
        node: usize,
        value: f64,
    },

    #[error("subject {subject}, visit {visit}: non-finite value")]
    NonFinite { subject: usize, visit: usize },

    #[error("subject {subject}: label {value} is not 0 or 1")]
    InvalidLabel { subject: usize, value: String },

    #[error("subject {subject} has no visits")]
    NoVisits { subject: usize },

    #[error("subject {subject}: age decreases at visit {visit}")]
    DecreasingAge { subject: usize, visit: usize },

    #[error("dataset contains no subjects")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("labels contain a single class; both 0 and 1 are required")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ages have zero spread; original-scale age effects are undefined")]
    DegenerateAges,

    #[error("{nodes} nodes is too few; the basis needs at least {required}")]
    TooFewNodes { nodes: usize, required: usize },

    #[error("fold {fold} contains a single class after stratification")]
    FoldSingleClass { fold: usize },

    #[error("penalty search did not bracket the all-zero threshold after {steps} steps")]
    DeltaSearchFailed { steps: usize },

    #[error("unknown method `{name}` (available: {available})")]
    UnknownMethod { name: String, available: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Malformed(_)
                | Error::NodeCount { .. }
                | Error::Asymmetric { .. }
                | Error::NonzeroDiagonal { .. }
                | Error::NonFinite { .. }
                | Error::InvalidLabel { .. }
                | Error::NoVisits { .. }
                | Error::DecreasingAge { .. }
                | Error::EmptyDataset
                | Error::DimensionMismatch { .. }
                | Error::SingleClass
                | Error::DegenerateAges
                | Error::FoldSingleClass { .. }
                | Error::DeltaSearchFailed { .. }
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
