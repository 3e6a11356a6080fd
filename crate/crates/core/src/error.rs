use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid signal parameters: need 0 < q0 < q1 < 1, got q0={q0}, q1={q1}")]
    InvalidParams { q0: f64, q1: f64 },

    #[error("probability {name}={value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("agent indices start at 1")]
    ZeroIndex,

    #[error("value {0} is not a binary signal or action")]
    NotBinary(u8),

    #[error("transcript holds {have} revealed actions but level {level} needs {need}")]
    TranscriptTooShort {
        level: u32,
        have: usize,
        need: usize,
    },

    #[error("threshold rule needs at least one observation")]
    EmptyObservation,

    #[error("history of length {have} does not fit agent {agent}")]
    HistoryLength { agent: u128, have: usize },

    #[error("action at position {position} is unreachable when every predecessor plays the rational strategy")]
    InconsistentHistory { position: usize },

    #[error("full enumeration of {n} agents exceeds the cap of {cap}")]
    EnumerationCap { n: u128, cap: u32 },

    #[error("no exact oracle exists for the {0} protocol")]
    NoExactOracle(&'static str),

    #[error("herding chain did not absorb its mass within {steps} agents")]
    ChainNotConverged { steps: usize },

    #[error("trial count must be at least 1")]
    NoTrials,

    #[error("probe index {index} is outside [1, {n}]")]
    ProbeOutOfRange { index: u128, n: u128 },

    #[error("agent index {0} exceeds the simulation limit of 2^60")]
    SimulationLimit(u128),

    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
