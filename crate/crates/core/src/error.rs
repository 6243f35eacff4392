use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected {expected} tensor factors, found {found}")]
    WrongFactorCount { expected: usize, found: usize },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("photon number {n} exceeds truncation n_max = {n_max}")]
    PhotonOutOfRange { n: usize, n_max: usize },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error(
        "truncation guard violated at t = {time}: population {population:e} on the top three Fock levels"
    )]
    TruncationGuard { time: f64, population: f64 },

    #[error("density matrix rank {rank} exceeds the supported limit {limit}")]
    RankTooLarge { rank: usize, limit: usize },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("scaled time radicand <n> - N/2 + 1/2 = {0} is not positive")]
    NonPositiveRadicand(f64),

    #[error("unsupported dimensions {0:?}")]
    UnsupportedDims(Vec<usize>),

    #[error("parse error: {0}")]
    Parse(String),
}
