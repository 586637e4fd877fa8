use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("filter length Q = {0} must be even and positive")]
    OddFilterLength(usize),

    #[error("zero count K = {k} must satisfy 1 <= K <= Q/2 = {half}")]
    ZeroCountOutOfRange { k: usize, half: usize },

    #[error("bandwidth B = {0} must be positive and finite")]
    InvalidBandwidth(f64),

    #[error("regularity violated: K0 = 2K - 1 - ceil(2 log2 B) = {k0} < 1")]
    Regularity { k0: i64 },

    #[error("orthonormal refinement did not converge (residual {residual:.3e})")]
    RefinementDiverged { residual: f64 },

    #[error("a packet tree needs at least two leaves, got Z = {0}")]
    TooFewGroups(usize),

    #[error("invalid sampling grid: {0}")]
    InvalidGrid(String),

    #[error("autocorrelation requested for an empty lag list")]
    EmptyLags,

    #[error("group index {group} out of range for a tree with {leaves} leaves")]
    GroupOutOfRange { group: usize, leaves: usize },

    #[error("decision values must be +1 or -1, got {0}")]
    InvalidDecision(i8),

    #[error("frames disagree on sampling parameters: {0}")]
    SamplingMismatch(String),

    #[error("received frame has {available} samples, need {needed} to cover the filter support")]
    FrameTooShort { needed: usize, available: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate channel: diagonal gain {value:.3e} of sensor {sensor} is below 1e-12")]
    DegenerateChannel { sensor: usize, value: f64 },

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("{0} population is empty")]
    EmptyPopulation(&'static str),

    #[error("SNR grid is empty")]
    EmptyGrid,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Persist { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
