//! The policy contract: scripted assignment-following controller used for
//! desk-scale evaluation, and a line-delimited stdin/stdout bridge for
//! externally trained policies.

use crate::error::{Error, Result};
use crate::observation::{EgoObservation, EntityGraph, EntityNode, EntityType};
use crate::vec2::Vec2;
use crate::world::{Action, WorldConfig};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

/// Everything a policy may read for one agent at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyInput {
    pub ego: EgoObservation,
    pub graph: EntityGraph,
    pub agent: usize,
    pub step: u32,
}

/// Which target the scripted controller steers toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// The nearest-goal slot of the ego observation (decentralized
    /// execution semantics; no assignment involved).
    EgoGoal1,
    /// The externally supplied assigned goal for this step.
    FixedAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub target_mode: TargetMode,
    /// Repulsion strength away from nearby agents and obstacles.
    pub avoid_gain: f64,
    /// Repulsion cutoff distance; must not exceed the sensing radius.
    pub avoid_range: f64,
}

impl ControllerConfig {
    pub fn new(target_mode: TargetMode) -> ControllerConfig {
        ControllerConfig {
            target_mode,
            avoid_gain: 0.3,
            avoid_range: 0.3,
        }
    }

    pub fn validate(&self, world: &WorldConfig) -> Result<()> {
        if self.avoid_range > world.sensing_radius {
            return Err(Error::Config(format!(
                "avoid_range ({}) must not exceed sensing_radius ({})",
                self.avoid_range, world.sensing_radius
            )));
        }
        Ok(())
    }
}

/// Picks the discrete action steering the agent toward its target while
/// repelling from nearby agents and obstacles.
///
/// The desired velocity is a unit vector toward the target scaled to
/// max_speed plus `avoid_gain * sum(away / d^2)` over agent/obstacle graph
/// nodes within `avoid_range`. The returned action minimizes the distance
/// between the desired velocity and the post-update velocity over all five
/// candidates; if the discrepancy is already below `accel * dt / 2` the
/// agent coasts. Done agents always return `Noop`, as does a
/// fixed-assignment controller that was given no target.
pub fn scripted_action(
    input: &PolicyInput,
    assigned_goal: Option<Vec2>,
    cfg: &ControllerConfig,
    world_cfg: &WorldConfig,
) -> Action {
    let ego = &input.ego;
    let target_rel = match cfg.target_mode {
        TargetMode::EgoGoal1 => ego.goal1_rel,
        TargetMode::FixedAssignment => match assigned_goal {
            Some(goal) => goal - ego.position,
            None => return Action::Noop,
        },
    };

    let mut repulsion = Vec2::ZERO;
    for node in &input.graph.nodes {
        if node.id == input.agent {
            continue;
        }
        if !matches!(node.entity_type, EntityType::Agent | EntityType::Obstacle) {
            continue;
        }
        let rel = Vec2::new(node.features[0], node.features[1]);
        let d = rel.norm();
        if d > 0.0 && d <= cfg.avoid_range {
            repulsion += (-rel).normalized() * (1.0 / (d * d));
        }
    }

    let desired = target_rel.normalized() * world_cfg.max_speed + repulsion * cfg.avoid_gain;
    let dead_zone = world_cfg.accel_magnitude * world_cfg.dt / 2.0;
    if (desired - ego.velocity).norm() <= dead_zone {
        return Action::Noop;
    }

    let mut best = Action::Noop;
    let mut best_score = f64::INFINITY;
    for action in Action::ALL {
        let next_v = ego.velocity * (1.0 - world_cfg.damping)
            + action.direction() * world_cfg.accel_magnitude * world_cfg.dt;
        let score = (desired - next_v).norm();
        if score < best_score {
            best_score = score;
            best = action;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Wire format for the external-policy protocol.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireNode {
    pub id: usize,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub features: [f64; 8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireGraph {
    pub nodes: Vec<WireNode>,
    pub edges: Vec<(usize, usize)>,
}

/// One agent's entry in a step request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireAgentInput {
    pub id: usize,
    pub ego: [f64; 10],
    pub graph: WireGraph,
}

/// One request line: all agents' observations for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub step: u32,
    pub agents: Vec<WireAgentInput>,
}

/// One response line: action codes 0=noop, 1=+x, 2=-x, 3=+y, 4=-y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub actions: Vec<u8>,
}

impl From<&PolicyInput> for WireAgentInput {
    fn from(input: &PolicyInput) -> WireAgentInput {
        WireAgentInput {
            id: input.agent,
            ego: input.ego.to_wire(),
            graph: WireGraph {
                nodes: input
                    .graph
                    .nodes
                    .iter()
                    .map(|n| WireNode {
                        id: n.id,
                        entity_type: n.entity_type,
                        features: n.features,
                    })
                    .collect(),
                edges: input.graph.edges.clone(),
            },
        }
    }
}

impl WireAgentInput {
    pub fn into_policy_input(self, step: u32) -> PolicyInput {
        PolicyInput {
            ego: EgoObservation::from_wire(&self.ego),
            graph: EntityGraph {
                nodes: self
                    .graph
                    .nodes
                    .into_iter()
                    .map(|n| EntityNode {
                        id: n.id,
                        entity_type: n.entity_type,
                        features: n.features,
                    })
                    .collect(),
                edges: self.graph.edges,
            },
            agent: self.id,
            step,
        }
    }
}

/// Synchronous bridge to an external policy process. One request line is
/// written per step and one response line is read back; the child owns no
/// state between episodes beyond what it keeps itself.
pub struct ExternalPolicy {
    child: Child,
    stdin: ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
    timeout: Duration,
}

pub const DEFAULT_POLICY_TIMEOUT: Duration = Duration::from_secs(10);

impl ExternalPolicy {
    /// Spawns `command` (split on whitespace) with piped stdin/stdout.
    pub fn spawn(command: &str, timeout: Duration) -> Result<ExternalPolicy> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::Protocol("empty external policy command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Protocol(format!("failed to spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalPolicy {
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }

    /// Sends all agents' inputs for one step and reads back one action per
    /// agent. Malformed or missing responses abort the episode.
    pub fn exchange(&mut self, step: u32, inputs: &[PolicyInput]) -> Result<Vec<Action>> {
        let request = WireRequest {
            step,
            agents: inputs.iter().map(WireAgentInput::from).collect(),
        };
        let mut line = serde_json::to_string(&request)
            .map_err(|e| Error::Protocol(format!("request serialization failed: {e}")))?;
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Protocol(format!("failed to write request: {e}")))?;

        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Error::Protocol(format!("failed to read response: {e}"))),
            Err(mpsc::RecvTimeoutError::Timeout) => return Err(Error::PolicyTimeout(self.timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                return Err(Error::Protocol("external policy closed its stdout".into()))
            }
        };
        let response: WireResponse = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
        if response.actions.len() != inputs.len() {
            return Err(Error::Protocol(format!(
                "expected {} actions, got {}",
                inputs.len(),
                response.actions.len()
            )));
        }
        response
            .actions
            .iter()
            .map(|&code| {
                Action::from_code(code)
                    .ok_or_else(|| Error::Protocol(format!("action code {code} out of range 0..4")))
            })
            .collect()
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::{EntityGraph, EntityNode};

    fn ego_at(position: Vec2, velocity: Vec2, goal1_rel: Vec2) -> EgoObservation {
        EgoObservation {
            position,
            velocity,
            goal1_rel,
            goal1_flag: 0.0,
            goal2_rel: Vec2::new(0.9, 0.9),
            goal2_flag: 0.0,
        }
    }

    fn bare_input(ego: EgoObservation) -> PolicyInput {
        let node = EntityNode {
            id: 0,
            entity_type: EntityType::Agent,
            features: [0.0; 8],
        };
        PolicyInput {
            ego,
            graph: EntityGraph {
                nodes: vec![node],
                edges: vec![],
            },
            agent: 0,
            step: 0,
        }
    }

    #[test]
    fn stationary_agent_accelerates_toward_goal() {
        let cfg = ControllerConfig::new(TargetMode::EgoGoal1);
        let world = WorldConfig::default();
        let input = bare_input(ego_at(Vec2::ZERO, Vec2::ZERO, Vec2::new(0.5, 0.0)));
        assert_eq!(scripted_action(&input, None, &cfg, &world), Action::AccelPlusX);
    }

    #[test]
    fn agent_at_goal_with_zero_velocity_coasts() {
        let cfg = ControllerConfig::new(TargetMode::EgoGoal1);
        let world = WorldConfig::default();
        let input = bare_input(ego_at(Vec2::ZERO, Vec2::ZERO, Vec2::ZERO));
        assert_eq!(scripted_action(&input, None, &cfg, &world), Action::Noop);
    }

    #[test]
    fn fixed_assignment_steers_to_the_assigned_goal() {
        let cfg = ControllerConfig::new(TargetMode::FixedAssignment);
        let world = WorldConfig::default();
        // Nearest goal is +x but the assignment points -y.
        let input = bare_input(ego_at(Vec2::new(0.1, 0.5), Vec2::ZERO, Vec2::new(0.4, 0.0)));
        let action = scripted_action(&input, Some(Vec2::new(0.1, -0.5)), &cfg, &world);
        assert_eq!(action, Action::AccelMinusY);
        // Without a target the controller refuses to guess.
        assert_eq!(scripted_action(&input, None, &cfg, &world), Action::Noop);
    }

    #[test]
    fn repulsion_matches_exhaustive_action_scoring() {
        let cfg = ControllerConfig::new(TargetMode::EgoGoal1);
        let world = WorldConfig::default();
        // Goal at +x, another agent directly ahead inside avoid_range.
        let neighbor_rel = Vec2::new(0.15, 0.02);
        let mut input = bare_input(ego_at(
            Vec2::ZERO,
            Vec2::new(0.3, 0.0),
            Vec2::new(0.6, 0.0),
        ));
        input.graph.nodes.push(EntityNode {
            id: 1,
            entity_type: EntityType::Agent,
            features: [neighbor_rel.x, neighbor_rel.y, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        });

        // Independent oracle: recompute the desired velocity and score all
        // five candidate actions directly.
        let d = neighbor_rel.norm();
        let repulsion = (-neighbor_rel).normalized() * (1.0 / (d * d)) * cfg.avoid_gain;
        let desired = input.ego.goal1_rel.normalized() * world.max_speed + repulsion;
        let mut best = Action::Noop;
        let mut best_score = f64::INFINITY;
        for action in Action::ALL {
            let v = input.ego.velocity * (1.0 - world.damping)
                + action.direction() * world.accel_magnitude * world.dt;
            let score = (desired - v).norm();
            if score < best_score {
                best_score = score;
                best = action;
            }
        }
        assert_eq!(scripted_action(&input, None, &cfg, &world), best);
        // The repulsion must actually deflect: without the neighbor the
        // action would chase the goal straight.
        let unobstructed = bare_input(ego_at(Vec2::ZERO, Vec2::new(0.3, 0.0), Vec2::new(0.6, 0.0)));
        assert_ne!(
            scripted_action(&unobstructed, None, &cfg, &world),
            scripted_action(&input, None, &cfg, &world)
        );
    }

    #[test]
    fn avoid_range_must_fit_sensing_radius() {
        let world = WorldConfig::default();
        let cfg = ControllerConfig {
            avoid_range: world.sensing_radius + 0.1,
            ..ControllerConfig::new(TargetMode::EgoGoal1)
        };
        assert!(cfg.validate(&world).is_err());
    }

    #[test]
    fn wire_round_trip_preserves_policy_input() {
        let ego = ego_at(Vec2::new(0.1, -0.2), Vec2::new(0.05, 0.0), Vec2::new(0.3, 0.4));
        let mut input = bare_input(ego);
        input.step = 17;
        input.graph.nodes.push(EntityNode {
            id: 5,
            entity_type: EntityType::Goal,
            features: [0.1, 0.2, 0.0, 0.0, 0.3, 0.4, 0.5, 2.0],
        });
        input.graph.edges.push((1, 0));
        let wire = WireAgentInput::from(&input);
        let json = serde_json::to_string(&wire).unwrap();
        let parsed: WireAgentInput = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, wire);
        let back = parsed.into_policy_input(17);
        assert_eq!(back, input);
    }

    #[test]
    fn response_length_and_code_validation() {
        let short: WireResponse = serde_json::from_str(r#"{"actions":[0,1]}"#).unwrap();
        assert_eq!(short.actions.len(), 2);
        assert!(Action::from_code(7).is_none());
        assert_eq!(Action::from_code(3), Some(Action::AccelPlusY));
    }
}
