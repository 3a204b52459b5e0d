use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("player {player}: expected {expected} strategies, got {got}")]
    Dimension {
        player: usize,
        expected: usize,
        got: usize,
    },
    #[error("profile has {got} players but the game has {expected}")]
    PlayerCount { expected: usize, got: usize },
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
    #[error("utility entry {index} = {value} lies outside [0, 1]")]
    UtilityRange { index: usize, value: f64 },
    #[error("enumerating {count} profiles exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("prox center has zero mass on coordinate {index}; entropy requires an interior point")]
    BoundaryPoint { index: usize },
    #[error("learner protocol violation: {0}")]
    Protocol(&'static str),
    #[error("best-response learner requires the opponents' current play")]
    MissingOracle,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
