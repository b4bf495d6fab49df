//! fairnav: a deterministic multi-agent navigation and formation simulator
//! with fairness-aware goal assignment.
//!
//! N agents navigate a 2D arena to cover N goals, one agent per goal.
//! Goal assignments come from one of three solvers: a per-episode random
//! permutation, the linear-sum-optimal matching, or the lexicographic
//! bottleneck (min-max fair) matching. Rewards decompose into distance,
//! fairness, goal, and collision terms, with fairness measured as the
//! reciprocal coefficient of variation of traveled distances. A benchmark
//! harness runs seeded episode batches, reports the F / S% / T / D
//! metrics, and emits replayable traces checked by a step-by-step
//! validator.

pub mod assignment;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fairness;
pub mod formation;
pub mod observation;
pub mod policy;
pub mod runner;
pub mod scenario;
pub mod trace;
pub mod vec2;
pub mod world;

pub use error::{Error, Result};
