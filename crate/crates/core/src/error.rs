use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position {norm:.3} m from the Earth's center is too close to the origin")]
    NearSingularOrigin { norm: f64 },

    #[error("degenerate geometry: satellite-receiver range {range:.6} m")]
    DegenerateGeometry { range: f64 },

    #[error("insufficient satellites: {available} usable, {required} required")]
    InsufficientSatellites { available: usize, required: usize },

    #[error("normal matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    SingularNormalMatrix { condition: f64 },

    #[error("solver did not converge")]
    NotConverged,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid weight {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("elevation {0} rad is outside the weighting domain (0, pi/2]")]
    InvalidElevation(f64),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),

    #[error("checkpoint version mismatch: {0}")]
    VersionMismatch(String),

    #[error("malformed dataset at line {line}: {reason}")]
    MalformedDataset { line: usize, reason: String },

    #[error("unsupported dataset format version {0}")]
    UnsupportedVersion(u32),

    #[error("no solvable epochs in the training data")]
    NoSolvableEpochs,

    #[error("method {method} requires a {architecture} checkpoint (pass it with --checkpoint)")]
    MissingCheckpoint {
        method: String,
        architecture: String,
    },

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
