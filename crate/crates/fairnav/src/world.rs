//! Domain types for the navigation world and seeded episode initialization.
//!
//! The world is the square `[-E, +E]^2`. Agents, goals, and obstacles are
//! discs; walls are axis-aligned rectangles. A coverage task always has as
//! many goals as agents.

use crate::error::{Error, Result};
use crate::observation;
use crate::scenario::ScenarioConfig;
use crate::vec2::Vec2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Extra clearance required between entity surfaces at placement time.
pub const PLACEMENT_CLEARANCE: f64 = 0.01;
/// Rejection-sampling budget per entity.
pub const PLACEMENT_ATTEMPTS: usize = 1000;

/// Static parameters of the environment and its reward constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Half side length E of the arena `[-E, +E]^2`.
    pub world_half_extent: f64,
    /// Simulation time per step.
    pub dt: f64,
    /// Dimensionless velocity decay applied each step before acceleration.
    pub damping: f64,
    /// Magnitude u of the discrete acceleration actions.
    pub accel_magnitude: f64,
    /// Speed cap applied after each velocity update.
    pub max_speed: f64,
    /// Sensing radius r for observations and graphs.
    pub sensing_radius: f64,
    pub agent_radius: f64,
    pub goal_radius: f64,
    pub obstacle_radius: f64,
    /// Maximum steps per episode.
    pub episode_length: u32,
    /// Collision penalty magnitude C (subtracted from reward).
    pub collision_penalty: f64,
    /// One-time goal reward magnitude.
    pub goal_reward: f64,
    /// Distance at which an agent counts as having reached a goal.
    pub done_threshold: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let agent_radius = 0.05;
        let goal_radius = 0.05;
        WorldConfig {
            world_half_extent: 1.0,
            dt: 0.1,
            damping: 0.25,
            accel_magnitude: 0.5,
            max_speed: 1.0,
            sensing_radius: 0.5,
            agent_radius,
            goal_radius,
            obstacle_radius: 0.10,
            episode_length: 100,
            collision_penalty: 5.0,
            goal_reward: 5.0,
            done_threshold: agent_radius + goal_radius,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be > 0".into()));
        }
        if self.episode_length < 1 {
            return Err(Error::Config("episode_length must be >= 1".into()));
        }
        if !(self.sensing_radius > 0.0) {
            return Err(Error::Config("sensing_radius must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::Config("damping must lie in [0, 1)".into()));
        }
        if !(self.accel_magnitude > 0.0) {
            return Err(Error::Config("accel_magnitude must be > 0".into()));
        }
        if !(self.max_speed > 0.0) {
            return Err(Error::Config("max_speed must be > 0".into()));
        }
        if !(self.world_half_extent > 0.0) {
            return Err(Error::Config("world_half_extent must be > 0".into()));
        }
        if !(self.done_threshold > 0.0) {
            return Err(Error::Config("done_threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// One of the five discrete actions: no-op or unit acceleration along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Noop,
    AccelPlusX,
    AccelMinusX,
    AccelPlusY,
    AccelMinusY,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Noop,
        Action::AccelPlusX,
        Action::AccelMinusX,
        Action::AccelPlusY,
        Action::AccelMinusY,
    ];

    /// Wire code used by the external-policy protocol.
    pub fn code(self) -> u8 {
        match self {
            Action::Noop => 0,
            Action::AccelPlusX => 1,
            Action::AccelMinusX => 2,
            Action::AccelPlusY => 3,
            Action::AccelMinusY => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.code() == code)
    }

    /// Unit direction of the acceleration, zero for `Noop`.
    pub fn direction(self) -> Vec2 {
        match self {
            Action::Noop => Vec2::ZERO,
            Action::AccelPlusX => Vec2::new(1.0, 0.0),
            Action::AccelMinusX => Vec2::new(-1.0, 0.0),
            Action::AccelPlusY => Vec2::new(0.0, 1.0),
            Action::AccelMinusY => Vec2::new(0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Cumulative path length traveled since episode start.
    pub distance_traveled: f64,
    pub done: bool,
    pub done_step: Option<u32>,
    pub claimed_goal: Option<usize>,
}

impl AgentState {
    pub fn at(position: Vec2) -> Self {
        AgentState {
            position,
            velocity: Vec2::ZERO,
            distance_traveled: 0.0,
            done: false,
            done_step: None,
            claimed_goal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalState {
    pub position: Vec2,
    /// Occupancy flag eta in [0, 1]; 1 means an agent sits on the goal.
    pub occupancy_flag: f64,
    pub claimed_by: Option<usize>,
}

impl GoalState {
    pub fn at(position: Vec2) -> Self {
        GoalState {
            position,
            occupancy_flag: 0.0,
            claimed_by: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub position: Vec2,
    pub radius: f64,
}

/// Axis-aligned wall: the segment from `a` to `b` swept by `thickness / 2`
/// on each side. `a` and `b` must share an x or y coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Vec2,
    pub b: Vec2,
    pub thickness: f64,
}

impl Wall {
    pub fn validate(&self) -> Result<()> {
        if self.a.x != self.b.x && self.a.y != self.b.y {
            return Err(Error::Config(
                "wall endpoints must share an x or y coordinate".into(),
            ));
        }
        if !(self.thickness > 0.0) {
            return Err(Error::Config("wall thickness must be > 0".into()));
        }
        Ok(())
    }

    fn bounds(&self) -> (Vec2, Vec2) {
        let half = self.thickness / 2.0;
        let lo = Vec2::new(self.a.x.min(self.b.x) - half, self.a.y.min(self.b.y) - half);
        let hi = Vec2::new(self.a.x.max(self.b.x) + half, self.a.y.max(self.b.y) + half);
        (lo, hi)
    }

    /// Distance from a point to the wall rectangle (zero inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let (lo, hi) = self.bounds();
        let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
        let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
        dx.hypot(dy)
    }

    /// Point samples along the centerline, used as obstacle-type graph nodes.
    pub fn sample_points(&self, spacing: f64) -> Vec<Vec2> {
        let len = (self.b - self.a).norm();
        let segments = if len == 0.0 {
            0
        } else {
            (len / spacing).ceil() as usize
        };
        (0..=segments)
            .map(|k| {
                let t = if segments == 0 {
                    0.0
                } else {
                    k as f64 / segments as f64
                };
                self.a + (self.b - self.a) * t
            })
            .collect()
    }
}

/// Identifier for a collision partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum EntityId {
    Agent(usize),
    Obstacle(usize),
    Wall(usize),
}

/// Full simulator state at one timestep; a plain value with no shared
/// mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub step_index: u32,
    pub agents: Vec<AgentState>,
    pub goals: Vec<GoalState>,
    pub obstacles: Vec<Obstacle>,
    pub walls: Vec<Wall>,
    /// Formation landmarks; empty in plain navigation scenarios. When
    /// non-empty, the landmarks (not the goals) appear as goal-type graph
    /// nodes.
    pub landmarks: Vec<Vec2>,
}

impl WorldState {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn all_done(&self) -> bool {
        self.agents.iter().all(|a| a.done)
    }
}

/// Derives independent sub-seeds from an episode seed (SplitMix64 step).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Placed {
    position: Vec2,
    radius: f64,
}

fn sample_disc(
    rng: &mut ChaCha8Rng,
    radius: f64,
    half_extent: f64,
    placed: &[Placed],
    walls: &[Wall],
    entity: &str,
) -> Result<Vec2> {
    let hi = half_extent - radius;
    if hi <= 0.0 {
        return Err(Error::Config(format!(
            "entity radius {radius} does not fit in arena of half extent {half_extent}"
        )));
    }
    for _ in 0..PLACEMENT_ATTEMPTS {
        let p = Vec2::new(rng.gen_range(-hi..hi), rng.gen_range(-hi..hi));
        let clear_discs = placed
            .iter()
            .all(|o| p.distance(o.position) > radius + o.radius + PLACEMENT_CLEARANCE);
        let clear_walls = walls
            .iter()
            .all(|w| w.distance_to(p) > radius + PLACEMENT_CLEARANCE);
        if clear_discs && clear_walls {
            return Ok(p);
        }
    }
    Err(Error::Placement {
        entity: entity.to_string(),
        attempts: PLACEMENT_ATTEMPTS,
    })
}

/// Builds the initial world for a scenario. Deterministic per seed; entities
/// never overlap at the start and no agent begins done.
pub fn init_world(config: &WorldConfig, scenario: &ScenarioConfig, seed: u64) -> Result<WorldState> {
    config.validate()?;
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = config.world_half_extent;

    let walls: Vec<Wall> = scenario.walls.iter().map(|w| w.to_wall()).collect();
    for w in &walls {
        w.validate()?;
        let (lo, hi) = (w.a, w.b);
        for p in [lo, hi] {
            if p.x.abs() > half || p.y.abs() > half {
                return Err(Error::Config("wall endpoint outside the arena".into()));
            }
        }
    }

    let mut placed: Vec<Placed> = Vec::new();
    let mut obstacles = Vec::with_capacity(scenario.num_obstacles);
    for k in 0..scenario.num_obstacles {
        let p = sample_disc(
            &mut rng,
            config.obstacle_radius,
            half,
            &placed,
            &walls,
            &format!("obstacle {k}"),
        )?;
        obstacles.push(Obstacle {
            position: p,
            radius: config.obstacle_radius,
        });
        placed.push(Placed {
            position: p,
            radius: config.obstacle_radius,
        });
    }

    let (goals, landmarks) = if let Some(formation) = &scenario.formation {
        let spec = formation.to_spec(scenario.num_agents)?;
        let expected = crate::formation::expected_positions(&spec)?;
        for p in &expected.points {
            if p.x.abs() > half || p.y.abs() > half {
                return Err(Error::Config(
                    "formation expected position outside the arena".into(),
                ));
            }
        }
        // Expected positions are markers, not physical discs: they are not
        // required to clear each other, but agents still spawn clear of them.
        for p in &expected.points {
            placed.push(Placed {
                position: *p,
                radius: config.goal_radius,
            });
        }
        let goals = expected.points.iter().map(|&p| GoalState::at(p)).collect();
        (goals, spec.landmarks.clone())
    } else {
        let mut goals = Vec::with_capacity(scenario.num_agents);
        for k in 0..scenario.num_agents {
            let p = sample_disc(
                &mut rng,
                config.goal_radius,
                half,
                &placed,
                &walls,
                &format!("goal {k}"),
            )?;
            goals.push(GoalState::at(p));
            placed.push(Placed {
                position: p,
                radius: config.goal_radius,
            });
        }
        (goals, Vec::new())
    };

    let mut agents = Vec::with_capacity(scenario.num_agents);
    for k in 0..scenario.num_agents {
        let p = sample_disc(
            &mut rng,
            config.agent_radius,
            half,
            &placed,
            &walls,
            &format!("agent {k}"),
        )?;
        agents.push(AgentState::at(p));
        placed.push(Placed {
            position: p,
            radius: config.agent_radius,
        });
    }

    let mut state = WorldState {
        step_index: 0,
        agents,
        goals,
        obstacles,
        walls,
        landmarks,
    };
    observation::refresh_occupancy_flags(&mut state);
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ScenarioConfig, WallSpec};

    fn scenario(num_agents: usize, num_obstacles: usize) -> ScenarioConfig {
        ScenarioConfig {
            num_agents,
            num_obstacles,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn same_seed_same_world() {
        let cfg = WorldConfig::default();
        let sc = scenario(5, 2);
        let a = init_world(&cfg, &sc, 7).unwrap();
        let b = init_world(&cfg, &sc, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn minimal_world_one_agent_one_goal() {
        let cfg = WorldConfig::default();
        let state = init_world(&cfg, &scenario(1, 0), 3).unwrap();
        assert_eq!(state.agents.len(), 1);
        assert_eq!(state.goals.len(), 1);
        let d = state.agents[0].position.distance(state.goals[0].position);
        assert!(d > cfg.agent_radius + cfg.goal_radius);
    }

    #[test]
    fn crowded_world_has_positive_clearances() {
        let cfg = WorldConfig::default();
        let sc = ScenarioConfig {
            num_agents: 10,
            num_obstacles: 3,
            walls: vec![
                WallSpec {
                    start: [-0.5, -0.8],
                    end: [-0.5, 0.0],
                    thickness: 0.02,
                },
                WallSpec {
                    start: [0.3, 0.2],
                    end: [0.9, 0.2],
                    thickness: 0.02,
                },
            ],
            ..ScenarioConfig::default()
        };
        let state = init_world(&cfg, &sc, 11).unwrap();
        assert_eq!(state.agents.len(), 10);
        assert_eq!(state.obstacles.len(), 3);
        assert_eq!(state.walls.len(), 2);

        // Direct pairwise clearance check over every disc entity.
        let mut discs: Vec<(Vec2, f64)> = Vec::new();
        discs.extend(state.agents.iter().map(|a| (a.position, cfg.agent_radius)));
        discs.extend(state.goals.iter().map(|g| (g.position, cfg.goal_radius)));
        discs.extend(state.obstacles.iter().map(|o| (o.position, o.radius)));
        for i in 0..discs.len() {
            for j in (i + 1)..discs.len() {
                let gap = discs[i].0.distance(discs[j].0) - discs[i].1 - discs[j].1;
                assert!(gap > 0.0, "entities {i} and {j} overlap (gap {gap})");
            }
        }
        for (p, r) in &discs {
            for w in &state.walls {
                assert!(w.distance_to(*p) > *r);
            }
        }
    }

    #[test]
    fn invariants_hold_over_many_seeds() {
        let cfg = WorldConfig::default();
        let sc = scenario(6, 2);
        for seed in 0..1000 {
            let state = init_world(&cfg, &sc, seed).unwrap();
            assert_eq!(state.agents.len(), state.goals.len());
            assert_eq!(state.agents.len(), 6);
            assert_eq!(state.obstacles.len(), 2);
            assert_eq!(state.step_index, 0);
            for a in &state.agents {
                assert!(!a.done && a.done_step.is_none() && a.claimed_goal.is_none());
                assert_eq!(a.distance_traveled, 0.0);
                assert!(a.position.x.abs() <= cfg.world_half_extent);
                assert!(a.position.y.abs() <= cfg.world_half_extent);
            }
            for g in &state.goals {
                assert!((0.0..=1.0).contains(&g.occupancy_flag));
                assert!(g.claimed_by.is_none());
                assert!(g.position.x.abs() <= cfg.world_half_extent);
                assert!(g.position.y.abs() <= cfg.world_half_extent);
            }
        }
    }

    #[test]
    fn overcrowded_scenario_reports_placement_failure() {
        let cfg = WorldConfig {
            world_half_extent: 0.3,
            ..WorldConfig::default()
        };
        let err = init_world(&cfg, &scenario(60, 0), 0).unwrap_err();
        assert!(matches!(err, Error::Placement { .. }), "got {err:?}");
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = WorldConfig {
            dt: 0.0,
            ..WorldConfig::default()
        };
        assert!(matches!(
            init_world(&cfg, &scenario(2, 0), 0),
            Err(Error::Config(_))
        ));
        let cfg = WorldConfig {
            damping: 1.0,
            ..WorldConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn diagonal_wall_rejected() {
        let w = Wall {
            a: Vec2::new(0.0, 0.0),
            b: Vec2::new(0.5, 0.5),
            thickness: 0.02,
        };
        assert!(w.validate().is_err());
    }

    #[test]
    fn wall_distance_and_samples() {
        let w = Wall {
            a: Vec2::new(0.0, 0.0),
            b: Vec2::new(1.0, 0.0),
            thickness: 0.02,
        };
        assert_eq!(w.distance_to(Vec2::new(0.5, 0.0)), 0.0);
        assert!((w.distance_to(Vec2::new(0.5, 0.5)) - 0.49).abs() < 1e-12);
        let pts = w.sample_points(0.1);
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0], w.a);
        assert_eq!(*pts.last().unwrap(), w.b);
    }

    #[test]
    fn derive_seed_streams_differ() {
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_eq!(derive_seed(42, 1), derive_seed(42, 1));
    }
}
