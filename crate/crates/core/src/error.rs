use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),

    #[error("negative intensity {value} on edge {source_id} -> {target}")]
    NegativeIntensity {
        source_id: String,
        target: String,
        value: f64,
    },

    #[error("negative call duration {value} on edge {source_id} -> {target}")]
    NegativeDuration {
        source_id: String,
        target: String,
        value: f64,
    },

    #[error("node `{id}` has non-positive population {population}")]
    BadPopulation { id: String, population: f64 },

    #[error("missing population for node `{0}`")]
    MissingPopulation(String),

    #[error("kernel parameter `{name}` must be strictly positive, got {value}")]
    BadKernelParam { name: &'static str, value: f64 },

    #[error("kernel `{0}` needs call aggregates (count and duration per pair)")]
    MissingAggregates(&'static str),

    #[error("node `{0}` has zero degree")]
    ZeroDegree(String),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("{what} out of range: {value} (allowed {allowed})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        allowed: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge after {matvecs} matvecs; best residuals {residuals:?}")]
    NoConvergence { matvecs: usize, residuals: Vec<f64> },

    #[error("node `{0}` has no cluster label")]
    Unlabeled(String),

    #[error("partition part {0} is empty")]
    EmptyPart(usize),

    #[error("could not place node {0} away from the others after 100 resamples")]
    CoincidentPoints(usize),

    #[error("{path}: line {line}: {msg}")]
    Csv {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("bad JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input problems are distinguished from numerical failures for the CLI exit status.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::ZeroDegree(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
