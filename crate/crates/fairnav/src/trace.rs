//! Episode traces: one JSON object per line (a header, then one record per
//! step), plus the validator that replays a trace and checks the reward
//! decomposition, state invariants, and assignment dominance at every step.

use crate::assignment::{self, Assignment, CostMatrix};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::fairness::{FairnessConfig, FairnessSnapshot, RewardBreakdown};
use crate::scenario::AssignMode;
use crate::vec2::Vec2;
use crate::world::{
    AgentState, EntityId, GoalState, Obstacle, Wall, WorldConfig, WorldState,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub position: Vec2,
    pub velocity: Vec2,
    pub distance_traveled: f64,
    pub done: bool,
    pub done_step: Option<u32>,
    pub claimed_goal: Option<usize>,
}

impl From<&AgentState> for AgentRecord {
    fn from(a: &AgentState) -> AgentRecord {
        AgentRecord {
            position: a.position,
            velocity: a.velocity,
            distance_traveled: a.distance_traveled,
            done: a.done,
            done_step: a.done_step,
            claimed_goal: a.claimed_goal,
        }
    }
}

/// Solver output echo: permutation plus its cost summary on the step's
/// cost matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub goal_of: Vec<usize>,
    pub sum: f64,
    pub max: f64,
}

impl SolverRecord {
    pub fn new(assignment: &Assignment, c: &CostMatrix) -> SolverRecord {
        SolverRecord {
            goal_of: assignment.goal_of.clone(),
            sum: assignment.total_cost(c),
            max: assignment.max_cost(c),
        }
    }
}

/// Fairness snapshot echo without the distances (recoverable from the
/// agent records) or the CV (undefined at zero mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessRecord {
    pub mean: f64,
    pub std: f64,
    pub fairness: f64,
}

impl From<&FairnessSnapshot> for FairnessRecord {
    fn from(s: &FairnessSnapshot) -> FairnessRecord {
        FairnessRecord {
            mean: s.mean,
            std: s.std,
            fairness: s.fairness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub seed: u64,
    pub assignment_mode: AssignMode,
    pub fairness_reward_enabled: bool,
    pub world: WorldConfig,
    pub epsilon: f64,
    pub lambda: f64,
    pub tau0: f64,
    pub goals: Vec<Vec2>,
    pub obstacles: Vec<Obstacle>,
    pub walls: Vec<Wall>,
    pub initial_agents: Vec<AgentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub assignment: Assignment,
    pub oa: SolverRecord,
    pub fa: SolverRecord,
    pub agents: Vec<AgentRecord>,
    pub collisions: Vec<(usize, EntityId)>,
    pub newly_done: Vec<usize>,
    pub rewards: Vec<RewardBreakdown>,
    pub fairness: FairnessRecord,
}

/// A trace line is either the header (first line) or a step record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
}

pub fn encode_line(line: &TraceLine) -> String {
    serde_json::to_string(line).expect("trace records serialize")
}

pub fn decode_line(text: &str) -> Result<TraceLine> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed trace line: {e}")))
}

fn violation(step: u32, message: impl Into<String>) -> Error {
    Error::TraceViolation {
        step,
        message: message.into(),
    }
}

/// Replays a trace and verifies, at every step: the exact reward
/// decomposition identity, world-state invariants (containment, speed
/// bound, path additivity, monotone done set, unique claims), the
/// fairness recomputation, assignment dominance on the recorded solver
/// outputs, and that the recorded solver outputs match recomputation from
/// the recorded positions. Returns the number of validated steps.
pub fn validate_trace(lines: &[TraceLine]) -> Result<u32> {
    let header = match lines.first() {
        Some(TraceLine::Header(h)) => h,
        _ => return Err(violation(0, "trace must start with a header line")),
    };
    let n = header.initial_agents.len();
    if header.goals.len() != n {
        return Err(violation(0, "header goal count differs from agent count"));
    }
    let world = &header.world;
    let fairness_cfg = FairnessConfig {
        epsilon: header.epsilon,
        lambda: header.lambda,
        tau0: header.tau0,
        fairness_reward_enabled: header.fairness_reward_enabled,
    };

    let mut prev: Vec<AgentRecord> = header.initial_agents.clone();
    let mut goal_paid = vec![false; n];
    let mut expected_step = 1u32;
    let mut validated = 0u32;

    for line in &lines[1..] {
        let record = match line {
            TraceLine::Step(s) => s,
            TraceLine::Header(_) => {
                return Err(violation(expected_step, "unexpected second header"))
            }
        };
        let step = record.step;
        if step != expected_step {
            return Err(violation(
                step,
                format!("expected step {expected_step}, found {step}"),
            ));
        }
        if record.agents.len() != n || record.rewards.len() != n {
            return Err(violation(step, "agent or reward count mismatch"));
        }

        // Assignment dominance on the recorded solver outputs.
        if !(record.oa.sum <= record.fa.sum) {
            return Err(violation(
                step,
                format!(
                    "dominance violated: sum(OA)={} > sum(FA)={}",
                    record.oa.sum, record.fa.sum
                ),
            ));
        }
        if !(record.fa.max <= record.oa.max) {
            return Err(violation(
                step,
                format!(
                    "dominance violated: max(FA)={} > max(OA)={}",
                    record.fa.max, record.oa.max
                ),
            ));
        }

        // Recompute both solvers from the pre-step positions.
        let cost_rows: Vec<Vec<f64>> = prev
            .iter()
            .map(|a| {
                header
                    .goals
                    .iter()
                    .map(|g| a.position.distance(*g))
                    .collect()
            })
            .collect();
        let c = CostMatrix::new(cost_rows)
            .map_err(|e| violation(step, format!("bad cost matrix: {e}")))?;
        let oa = assignment::assign_optimal(&c);
        let fa = assignment::assign_minmax_fair(&c)
            .map_err(|e| violation(step, format!("minmax solver failed: {e}")))?;
        if oa.goal_of != record.oa.goal_of || SolverRecord::new(&oa, &c) != record.oa {
            return Err(violation(step, "recorded OA does not match recomputation"));
        }
        if fa.goal_of != record.fa.goal_of || SolverRecord::new(&fa, &c) != record.fa {
            return Err(violation(step, "recorded FA does not match recomputation"));
        }
        if !record.assignment.is_permutation() || record.assignment.goal_of.len() != n {
            return Err(violation(step, "assignment is not a permutation"));
        }

        let mut claimed = vec![false; n];
        for (i, agent) in record.agents.iter().enumerate() {
            let p = prev[i].position;
            let q = agent.position;
            if q.x.abs() > world.world_half_extent || q.y.abs() > world.world_half_extent {
                return Err(violation(step, format!("agent {i} outside the arena")));
            }
            if agent.velocity.norm() > world.max_speed + 1e-9 {
                return Err(violation(step, format!("agent {i} exceeds max speed")));
            }
            let expected_distance = prev[i].distance_traveled + q.distance(p);
            if agent.distance_traveled != expected_distance {
                return Err(violation(
                    step,
                    format!("agent {i} distance_traveled breaks path additivity"),
                ));
            }
            if prev[i].done {
                if !agent.done {
                    return Err(violation(step, format!("agent {i} left the done set")));
                }
                if q != p {
                    return Err(violation(step, format!("done agent {i} moved")));
                }
            }
            if agent.done {
                let goal = match agent.claimed_goal {
                    Some(g) if g < n => g,
                    _ => {
                        return Err(violation(
                            step,
                            format!("done agent {i} has no valid claimed goal"),
                        ))
                    }
                };
                if claimed[goal] {
                    return Err(violation(step, format!("goal {goal} claimed twice")));
                }
                claimed[goal] = true;
                if q.distance(header.goals[goal]) > world.done_threshold + 1e-9 {
                    return Err(violation(
                        step,
                        format!("done agent {i} is not at its claimed goal"),
                    ));
                }
            }
        }
        for &i in &record.newly_done {
            if i >= n || !record.agents[i].done || prev[i].done {
                return Err(violation(step, format!("bad newly_done entry {i}")));
            }
        }

        // Collision events recompute from the recorded post-step state.
        let reconstructed = WorldState {
            step_index: step,
            agents: record
                .agents
                .iter()
                .map(|a| AgentState {
                    position: a.position,
                    velocity: a.velocity,
                    distance_traveled: a.distance_traveled,
                    done: a.done,
                    done_step: a.done_step,
                    claimed_goal: a.claimed_goal,
                })
                .collect(),
            goals: header.goals.iter().map(|&g| GoalState::at(g)).collect(),
            obstacles: header.obstacles.clone(),
            walls: header.walls.clone(),
            landmarks: Vec::new(),
        };
        let collisions = dynamics::detect_collisions(&reconstructed, world);
        if collisions != record.collisions {
            return Err(violation(step, "recorded collisions do not match recomputation"));
        }

        // Fairness snapshot recomputation.
        let distances: Vec<f64> = record.agents.iter().map(|a| a.distance_traveled).collect();
        let snapshot = crate::fairness::fairness_metric(&distances, header.epsilon)
            .map_err(|e| violation(step, format!("fairness recomputation failed: {e}")))?;
        let recomputed = FairnessRecord::from(&snapshot);
        if recomputed != record.fairness {
            return Err(violation(step, "recorded fairness does not match recomputation"));
        }

        // Reward decomposition and per-term checks.
        let shared_fair = if fairness_cfg.fairness_reward_enabled {
            crate::fairness::fairness_reward(&snapshot, &fairness_cfg)
        } else {
            0.0
        };
        for (i, r) in record.rewards.iter().enumerate() {
            let total = r.dist_reward + r.fair_reward + r.goal_reward + r.collision_penalty;
            if r.total != total {
                return Err(violation(
                    step,
                    format!("agent {i} reward total breaks the decomposition identity"),
                ));
            }
            if r.fair_reward.abs() > fairness_cfg.lambda + 1e-12 {
                return Err(violation(step, format!("agent {i} fairness reward exceeds lambda")));
            }
            if r.fair_reward != shared_fair {
                return Err(violation(
                    step,
                    format!("agent {i} fairness reward differs from the team value"),
                ));
            }
            let assigned = record.assignment.goal_of[i];
            let expected_dist =
                -record.agents[i].position.distance(header.goals[assigned]);
            if r.dist_reward != expected_dist {
                return Err(violation(step, format!("agent {i} distance reward mismatch")));
            }
            if r.goal_reward != 0.0 {
                if goal_paid[i] {
                    return Err(violation(step, format!("agent {i} paid a second goal reward")));
                }
                if !record.newly_done.contains(&i) {
                    return Err(violation(
                        step,
                        format!("agent {i} goal reward without becoming done"),
                    ));
                }
                goal_paid[i] = true;
            }
        }

        prev = record.agents.clone();
        expected_step += 1;
        validated += 1;
    }
    Ok(validated)
}

/// Parses a whole trace blob (one JSON object per line).
pub fn parse_trace(text: &str) -> Result<Vec<TraceLine>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(decode_line)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_line("not json").is_err());
        assert!(decode_line("{\"kind\":\"unknown\"}").is_err());
    }

    #[test]
    fn header_must_come_first() {
        let err = validate_trace(&[]).unwrap_err();
        assert!(err.to_string().contains("header"));
    }
}
