//! Local observations: goal occupancy flags, the ego observation vector
//! with its nearest-unoccupied-goal fallback, and the per-agent entity
//! graph.

use crate::vec2::Vec2;
use crate::world::{WorldConfig, WorldState};
use serde::{Deserialize, Serialize};

/// Occupancy flag above which a goal counts as occupied for the
/// nearest-unoccupied-goal fallback (agent within 0.05 of the goal).
pub const OCCUPIED_THRESHOLD: f64 = 0.95;

/// Per-goal occupancy flags eta = clamp(1 - d_min, 0, 1), where d_min is
/// the distance of the nearest agent. Recomputed from scratch each step.
pub fn update_occupancy_flags(state: &WorldState) -> Vec<f64> {
    state
        .goals
        .iter()
        .map(|g| {
            let d_min = state
                .agents
                .iter()
                .map(|a| a.position.distance(g.position))
                .fold(f64::INFINITY, f64::min);
            if d_min.is_finite() {
                (1.0 - d_min).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Writes freshly computed occupancy flags into the state.
pub fn refresh_occupancy_flags(state: &mut WorldState) {
    let flags = update_occupancy_flags(state);
    for (goal, flag) in state.goals.iter_mut().zip(flags) {
        goal.occupancy_flag = flag;
    }
}

/// The ego observation: own position and velocity plus the two closest
/// goals (relative positions and occupancy flags).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoObservation {
    pub position: Vec2,
    pub velocity: Vec2,
    pub goal1_rel: Vec2,
    pub goal1_flag: f64,
    pub goal2_rel: Vec2,
    pub goal2_flag: f64,
}

impl EgoObservation {
    /// Flat wire layout: [px, py, vx, vy, g1x, g1y, eta1, g2x, g2y, eta2].
    pub fn to_wire(&self) -> [f64; 10] {
        [
            self.position.x,
            self.position.y,
            self.velocity.x,
            self.velocity.y,
            self.goal1_rel.x,
            self.goal1_rel.y,
            self.goal1_flag,
            self.goal2_rel.x,
            self.goal2_rel.y,
            self.goal2_flag,
        ]
    }

    pub fn from_wire(w: &[f64; 10]) -> EgoObservation {
        EgoObservation {
            position: Vec2::new(w[0], w[1]),
            velocity: Vec2::new(w[2], w[3]),
            goal1_rel: Vec2::new(w[4], w[5]),
            goal1_flag: w[6],
            goal2_rel: Vec2::new(w[7], w[8]),
            goal2_flag: w[9],
        }
    }
}

/// Builds agent `agent`'s ego observation.
///
/// goal1/goal2 are the two nearest goals (ties to the lower index). If
/// every goal within sensing range is occupied (flag >= 0.95) and the
/// agent is not done, goal1 is replaced by the nearest unoccupied goal
/// anywhere in the world; this is the only place a faraway entity leaks
/// into an observation. Worlds with a single goal duplicate it into the
/// goal2 slot.
pub fn observe(state: &WorldState, agent: usize, config: &WorldConfig) -> EgoObservation {
    let ego = &state.agents[agent];
    let mut order: Vec<(usize, f64)> = state
        .goals
        .iter()
        .enumerate()
        .map(|(j, g)| (j, ego.position.distance(g.position)))
        .collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));

    let mut goal1 = order[0].0;
    let mut goal2 = if order.len() > 1 { order[1].0 } else { order[0].0 };

    if !ego.done {
        let all_nearby_occupied = order
            .iter()
            .filter(|&&(_, d)| d <= config.sensing_radius)
            .all(|&(j, _)| state.goals[j].occupancy_flag >= OCCUPIED_THRESHOLD);
        if all_nearby_occupied {
            let nearest_free = order
                .iter()
                .find(|&&(j, _)| state.goals[j].occupancy_flag < OCCUPIED_THRESHOLD)
                .map(|&(j, _)| j);
            if let Some(free) = nearest_free {
                if free == goal2 {
                    goal2 = goal1;
                }
                goal1 = free;
            }
        }
    }

    EgoObservation {
        position: ego.position,
        velocity: ego.velocity,
        goal1_rel: state.goals[goal1].position - ego.position,
        goal1_flag: state.goals[goal1].occupancy_flag,
        goal2_rel: state.goals[goal2].position - ego.position,
        goal2_flag: state.goals[goal2].occupancy_flag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Agent,
    Obstacle,
    Goal,
}

impl EntityType {
    pub fn code(self) -> f64 {
        match self {
            EntityType::Agent => 0.0,
            EntityType::Obstacle => 1.0,
            EntityType::Goal => 2.0,
        }
    }
}

/// One node of the ego graph. Features are relative to the ego agent:
/// [rel position (2), rel velocity (2), rel position of the entity's
/// closest goal (2), that goal's flag, entity type code].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityNode {
    pub id: usize,
    pub entity_type: EntityType,
    pub features: [f64; 8],
}

/// Ego-neighborhood graph: all entities within sensing range of the ego
/// agent plus the ego itself. Agent-agent edges run in both directions;
/// non-agent nodes send one directed edge toward each agent in range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityGraph {
    pub nodes: Vec<EntityNode>,
    /// Directed (source, destination) pairs indexing into `nodes`.
    pub edges: Vec<(usize, usize)>,
}

struct Entity {
    id: usize,
    entity_type: EntityType,
    position: Vec2,
    velocity: Vec2,
}

/// All entities with stable ids: agents, then goal-type entities (the
/// landmarks in formation worlds, otherwise the goals), then obstacles,
/// then wall sample points.
fn enumerate_entities(state: &WorldState, config: &WorldConfig) -> Vec<Entity> {
    let mut entities = Vec::new();
    let mut id = 0;
    for a in &state.agents {
        entities.push(Entity {
            id,
            entity_type: EntityType::Agent,
            position: a.position,
            velocity: a.velocity,
        });
        id += 1;
    }
    let goal_positions: Vec<Vec2> = if state.landmarks.is_empty() {
        state.goals.iter().map(|g| g.position).collect()
    } else {
        state.landmarks.clone()
    };
    for p in goal_positions {
        entities.push(Entity {
            id,
            entity_type: EntityType::Goal,
            position: p,
            velocity: Vec2::ZERO,
        });
        id += 1;
    }
    for o in &state.obstacles {
        entities.push(Entity {
            id,
            entity_type: EntityType::Obstacle,
            position: o.position,
            velocity: Vec2::ZERO,
        });
        id += 1;
    }
    for w in &state.walls {
        for p in w.sample_points(2.0 * config.agent_radius) {
            entities.push(Entity {
                id,
                entity_type: EntityType::Obstacle,
                position: p,
                velocity: Vec2::ZERO,
            });
            id += 1;
        }
    }
    entities
}

/// Builds agent `agent`'s local entity graph.
pub fn build_graph(state: &WorldState, agent: usize, config: &WorldConfig) -> EntityGraph {
    let ego = &state.agents[agent];
    let entities = enumerate_entities(state, config);
    let in_range: Vec<&Entity> = entities
        .iter()
        .filter(|e| e.id == agent || e.position.distance(ego.position) <= config.sensing_radius)
        .collect();

    let nodes: Vec<EntityNode> = in_range
        .iter()
        .map(|e| {
            // Closest goal of this entity, measured from the entity itself;
            // the feature stores its position relative to the ego agent.
            let closest_goal = state
                .goals
                .iter()
                .enumerate()
                .map(|(j, g)| (j, e.position.distance(g.position)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            let (goal_rel, goal_flag) = match closest_goal {
                Some((j, _)) => (
                    state.goals[j].position - ego.position,
                    state.goals[j].occupancy_flag,
                ),
                None => (Vec2::ZERO, 0.0),
            };
            let rel_pos = e.position - ego.position;
            let rel_vel = match e.entity_type {
                EntityType::Agent => e.velocity - ego.velocity,
                _ => Vec2::ZERO,
            };
            EntityNode {
                id: e.id,
                entity_type: e.entity_type,
                features: [
                    rel_pos.x,
                    rel_pos.y,
                    rel_vel.x,
                    rel_vel.y,
                    goal_rel.x,
                    goal_rel.y,
                    goal_flag,
                    e.entity_type.code(),
                ],
            }
        })
        .collect();

    let mut edges = Vec::new();
    for (u, eu) in in_range.iter().enumerate() {
        for (v, ev) in in_range.iter().enumerate() {
            if u >= v {
                continue;
            }
            if eu.position.distance(ev.position) > config.sensing_radius {
                continue;
            }
            match (eu.entity_type, ev.entity_type) {
                (EntityType::Agent, EntityType::Agent) => {
                    edges.push((u, v));
                    edges.push((v, u));
                }
                (_, EntityType::Agent) => edges.push((u, v)),
                (EntityType::Agent, _) => edges.push((v, u)),
                _ => {}
            }
        }
    }

    EntityGraph { nodes, edges }
}
