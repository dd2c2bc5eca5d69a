use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid register: {0}")]
    InvalidRegister(String),

    #[error("invalid party set: {0}")]
    InvalidParties(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("not a density operator: {0}")]
    NotDensity(String),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("unknown catalog state `{0}`")]
    UnknownState(String),

    #[error("invalid marginal pattern: {0}")]
    Pattern(String),

    #[error("invalid program: {0}")]
    Program(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
