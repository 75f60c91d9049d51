use thiserror::Error;

/// Errors raised by model construction, configuration checks and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid quantization parameters: {0}")]
    InvalidQuant(String),

    #[error("LUT overflow: degree {degree} peak {peak:.4} x scale {lut_scale} exceeds the activation range")]
    LutOverflow { degree: usize, peak: f64, lut_scale: f64 },

    #[error("malformed LUT listing at line {line}: {msg}")]
    LutFormat { line: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("int32 accumulator overflow at {0}")]
    AccumulatorOverflow(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid conv geometry: {0}")]
    ConvGeometry(String),

    #[error("workload `{field}`: {msg}")]
    Workload { field: String, msg: String },

    #[error("unknown PE kind {0}")]
    UnknownPeKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn workload(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Workload { field: field.into(), msg: msg.into() }
    }
}
