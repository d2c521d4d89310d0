use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("hazard rate undefined at x = {x}: the survival function is zero")]
    HazardUndefined { x: f64 },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("game has {entries} utility entries, above the cap of {cap}")]
    ShapeTooLarge { entries: u128, cap: u64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("negative epsilon {0}")]
    NegativeEpsilon(f64),

    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    #[error("correlation matrix is not positive semidefinite (pivot {pivot} at row {row})")]
    NotPositiveSemidefinite { row: usize, pivot: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has {0} vertices; exhaustive expansion checks support at most 24")]
    GraphTooLarge(usize),

    #[error("quadrature did not converge: estimate {estimate}, error {error} > tolerance {tolerance}")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
