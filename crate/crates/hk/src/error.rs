use thiserror::Error;

#[derive(Debug, Error)]
pub enum HkError {
    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("operation requires dimension {expected}, configuration has dimension {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("point has {got} coordinates, configuration has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("configurations have mismatched sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("trajectory does not cover times {t}..={t_end}")]
    TrajectoryTooShort { t: usize, t_end: usize },
    #[error("system already converged at time {0}, no active agent")]
    NoActiveAgent(usize),
    #[error("regular n-gon vertices are irrational; exact mode is unsupported")]
    ExactUnsupported,
    #[error("all agents coincide; pairwise margin is undefined")]
    NoDistinctPairs,
    #[error("n-gon oracle state is no longer valid (next-nearest vertices are neighbors)")]
    OracleInvalid,
    #[error("invalid noisy parameters: {0}")]
    InvalidNoisyParams(String),
    #[error("invalid instance parameters: {0}")]
    InvalidInstance(String),
    #[error("line {line}: cannot parse coordinate {text:?}: {reason}")]
    Parse {
        line: usize,
        text: String,
        reason: String,
    },
    #[error("empty instance file")]
    EmptyInstance,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HkError>;
