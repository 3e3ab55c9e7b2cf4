use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("insufficient data: need at least {need} samples, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("action out of domain: {0}")]
    Domain(String),
    #[error("rule violation: {0}")]
    RuleViolation(String),
    #[error("no legal actions: state is terminal")]
    TerminalState,
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
