//! Fairness metric over traveled distances, the tanh-shaped fairness
//! reward, and the per-agent total reward composition.

use crate::assignment::Assignment;
use crate::dynamics::StepOutcome;
use crate::error::{Error, Result};
use crate::world::{EntityId, WorldConfig, WorldState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessConfig {
    /// Small positive denominator guard epsilon.
    pub epsilon: f64,
    /// Reward scale lambda.
    pub lambda: f64,
    /// Metric shift tau0 inside the tanh.
    pub tau0: f64,
    pub fairness_reward_enabled: bool,
}

impl Default for FairnessConfig {
    fn default() -> Self {
        FairnessConfig {
            epsilon: 1e-5,
            lambda: 0.5,
            tau0: 1.0,
            fairness_reward_enabled: false,
        }
    }
}

/// Distance statistics and the fairness metric F = mean / (std + epsilon)
/// at one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSnapshot {
    pub distances: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Coefficient of variation std / mean (NaN when the mean is zero).
    pub cv: f64,
    pub fairness: f64,
}

/// Computes the fairness metric over per-agent cumulative distances.
///
/// Distances are folded in sorted order so the result is bit-identical
/// under any permutation of the input.
pub fn fairness_metric(distances: &[f64], epsilon: f64) -> Result<FairnessSnapshot> {
    if distances.len() < 2 {
        return Err(Error::TooFewAgents(distances.len()));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let fairness = mean / (std + epsilon);
    Ok(FairnessSnapshot {
        distances: distances.to_vec(),
        mean,
        std,
        cv: std / mean,
        fairness,
    })
}

/// The team-wide fairness reward lambda * tanh(F - tau0); every agent
/// receives the identical value.
pub fn fairness_reward(snapshot: &FairnessSnapshot, cfg: &FairnessConfig) -> f64 {
    cfg.lambda * (snapshot.fairness - cfg.tau0).tanh()
}

/// Per-agent reward terms for one step; `total` is exactly the sum of the
/// four parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Negative Euclidean distance to the assigned goal.
    pub dist_reward: f64,
    pub fair_reward: f64,
    /// One-time goal reward, paid when the agent reaches its assigned goal.
    pub goal_reward: f64,
    /// Negative collision penalty (zero or -C).
    pub collision_penalty: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn compose(dist: f64, fair: f64, goal: f64, collision: f64) -> RewardBreakdown {
        RewardBreakdown {
            dist_reward: dist,
            fair_reward: fair,
            goal_reward: goal,
            collision_penalty: collision,
            total: dist + fair + goal + collision,
        }
    }
}

fn agent_collided(agent: usize, collisions: &[(usize, EntityId)]) -> bool {
    collisions
        .iter()
        .any(|&(a, other)| a == agent || other == EntityId::Agent(agent))
}

/// Composes the per-agent total reward for the step that produced
/// `outcome`. Distances use the post-step positions; assignments shape
/// rewards only, never observations.
pub fn total_reward(
    assignment: &Assignment,
    outcome: &StepOutcome,
    snapshot: &FairnessSnapshot,
    cfg: &FairnessConfig,
    world_cfg: &WorldConfig,
) -> Vec<RewardBreakdown> {
    let state: &WorldState = &outcome.new_state;
    let fair = if cfg.fairness_reward_enabled {
        fairness_reward(snapshot, cfg)
    } else {
        0.0
    };
    state
        .agents
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let assigned = assignment.goal_of[i];
            let dist = -agent.position.distance(state.goals[assigned].position);
            let reached_assigned = outcome.newly_done.contains(&i)
                && state.agents[i].claimed_goal == Some(assigned);
            let goal = if reached_assigned {
                world_cfg.goal_reward
            } else {
                0.0
            };
            let collision = if agent_collided(i, &outcome.collisions) {
                -world_cfg.collision_penalty
            } else {
                0.0
            };
            RewardBreakdown::compose(dist, fair, goal, collision)
        })
        .collect()
}
