use std::path::PathBuf;

/// Errors produced anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two (or is smaller than 4)")]
    GridSize(usize),

    #[error("grid size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("spectral field is not Hermitian (max asymmetry {0:.3e})")]
    NonHermitian(f64),

    #[error("field has nonzero mean coefficient {0:.3e}")]
    NonzeroMean(f64),

    #[error("window is not aligned with the grid: {0}")]
    Misaligned(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in state at t = {time}")]
    NonFinite { time: f64 },

    #[error("a dominant-window decision at t = {0} needs coarse observations")]
    MissingCoarseData(f64),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
