use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("component {index} is negative ({value})")]
    NegativeComponent { index: usize, value: f64 },

    #[error("components sum to {sum}, outside the simplex tolerance")]
    SumOutOfTolerance { sum: f64 },

    #[error("dimension {m} is below the minimum of 2")]
    DimensionTooSmall { m: usize },

    #[error("smoothing parameter theta = {theta} is outside [0, 1]")]
    ThetaOutOfRange { theta: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cannot take the mean of an empty cluster")]
    EmptyCluster,

    #[error("dataset has no observations")]
    EmptyDataset,

    #[error("k must be between 1 and n = {n}, got {k}")]
    KTooLarge { k: usize, n: usize },

    #[error("codebook prototypes differ from the cluster means (max component delta {max_delta:e})")]
    StaleCenters { max_delta: f64 },

    #[error("invalid merge set: {reason}")]
    InvalidMergeSet { reason: String },

    #[error("invalid regularization parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("invalid radii: require log(m) <= r < Z, got r = {r}, Z = {z}")]
    InvalidRadii { r: f64, z: f64 },

    #[error("invalid mixture spec: {reason}")]
    InvalidSpec { reason: String },

    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to zero and cannot be normalized")]
    ZeroRowSum { row: usize },

    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumericCell {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
