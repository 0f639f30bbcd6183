use thiserror::Error;

/// Errors raised by the sketch, its estimators and the snapshot codec.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("empty key")]
    EmptyKey,
    #[error("bit-zero probability q must lie in (0,1), got {0}")]
    InvalidBias(f64),
    #[error("bucket capacity must be at least 1")]
    InvalidCapacity,
    #[error("incompatible sketches: {field} differs ({left} vs {right})")]
    Incompatible {
        field: &'static str,
        left: String,
        right: String,
    },
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error("unsupported snapshot version {0}")]
    SnapshotVersion(u8),
    #[error("the cache is empty")]
    NoSample,
    #[error("color tag {0} is out of range")]
    InvalidColor(u32),
    #[error("green multiplicity must be at least 2, got {0}")]
    InvalidGreenMultiplicity(u64),
}

/// Errors raised when evaluating the analytic oracle.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument hits a pole of the gamma function: {0}")]
    GammaPole(f64),
    #[error("moment order {k} is not supported (bucket {b})")]
    InvalidOrder { k: u32, b: u32 },
}

/// Errors raised by the simulation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid stream spec: {0}")]
    InvalidSpec(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("metric {0} is not available with the {1} pipeline")]
    UnsupportedMetric(String, &'static str),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}
