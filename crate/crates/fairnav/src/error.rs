//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejection sampling ran out of attempts while placing an entity;
    /// the scenario is over-crowded for the arena.
    #[error("placement failed for {entity} after {attempts} attempts")]
    Placement { entity: String, attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("expected {expected} actions, got {got}")]
    ActionCountMismatch { expected: usize, got: usize },

    #[error("step index {step} is out of range (episode length {episode_length})")]
    StepOutOfRange { step: u32, episode_length: u32 },

    #[error("invalid cost matrix: {0}")]
    CostMatrix(String),

    #[error("brute-force assignment limited to n <= {max}, got n = {n}")]
    BruteForceSize { n: usize, max: usize },

    #[error("fairness metric needs at least 2 agents, got {0}")]
    TooFewAgents(usize),

    #[error("external policy protocol error: {0}")]
    Protocol(String),

    #[error("external policy timed out after {0:?}")]
    PolicyTimeout(std::time::Duration),

    #[error("trace violation at step {step}: {message}")]
    TraceViolation { step: u32, message: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
