//! Scenario configuration: the key/value tree read from a TOML file that
//! selects entity counts, assignment mode, fairness reward, and optional
//! formation task. Unknown keys are rejected.

use crate::error::{Error, Result};
use crate::fairness::FairnessConfig;
use crate::formation::{FormationShape, FormationSpec};
use crate::vec2::Vec2;
use crate::world::{Wall, WorldConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Goal assignment strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignMode {
    /// Uniformly random permutation fixed at episode start (RA).
    Random,
    /// Linear-sum-optimal assignment recomputed every step (OA).
    Optimal,
    /// Lexicographic bottleneck (min-max fair) assignment recomputed every
    /// step (FA).
    Minmax,
}

impl AssignMode {
    pub fn parse(s: &str) -> Result<AssignMode> {
        match s {
            "random" => Ok(AssignMode::Random),
            "optimal" => Ok(AssignMode::Optimal),
            "minmax" => Ok(AssignMode::Minmax),
            other => Err(Error::Config(format!(
                "unknown assignment mode {other:?} (expected random, optimal, or minmax)"
            ))),
        }
    }
}

/// The four model variants as pure configuration presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Ra,
    Oa,
    Fa,
    FaFr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Ra, Variant::Oa, Variant::Fa, Variant::FaFr];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Ra => "ra",
            Variant::Oa => "oa",
            Variant::Fa => "fa",
            Variant::FaFr => "fa_fr",
        }
    }

    pub fn assign_mode(self) -> AssignMode {
        match self {
            Variant::Ra => AssignMode::Random,
            Variant::Oa => AssignMode::Optimal,
            Variant::Fa | Variant::FaFr => AssignMode::Minmax,
        }
    }

    pub fn fairness_reward_enabled(self) -> bool {
        matches!(self, Variant::FaFr)
    }

    pub fn from_settings(mode: AssignMode, fairness_reward: bool) -> Variant {
        match (mode, fairness_reward) {
            (AssignMode::Random, _) => Variant::Ra,
            (AssignMode::Optimal, _) => Variant::Oa,
            (AssignMode::Minmax, false) => Variant::Fa,
            (AssignMode::Minmax, true) => Variant::FaFr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub start: [f64; 2],
    pub end: [f64; 2],
    #[serde(default = "default_wall_thickness")]
    pub thickness: f64,
}

fn default_wall_thickness() -> f64 {
    0.02
}

impl WallSpec {
    pub fn to_wall(&self) -> Wall {
        Wall {
            a: Vec2::new(self.start[0], self.start[1]),
            b: Vec2::new(self.end[0], self.end[1]),
            thickness: self.thickness,
        }
    }
}

/// Formation block of the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationConfig {
    /// Shape name: circle, line, arrow, or infinity.
    pub shape: String,
    /// One landmark (circle/arrow/infinity) or two (line).
    pub landmarks: Vec<[f64; 2]>,
    pub scale: f64,
    #[serde(default = "default_formation_threshold")]
    pub threshold: f64,
    /// Must equal num_agents when given; defaults to num_agents.
    #[serde(default)]
    pub n_positions: Option<usize>,
}

fn default_formation_threshold() -> f64 {
    0.1
}

impl FormationConfig {
    pub fn to_spec(&self, num_agents: usize) -> Result<FormationSpec> {
        let shape = FormationShape::parse(&self.shape)?;
        if let Some(n) = self.n_positions {
            if n != num_agents {
                return Err(Error::Config(format!(
                    "formation n_positions ({n}) must equal num_agents ({num_agents})"
                )));
            }
        }
        let spec = FormationSpec {
            shape,
            landmarks: self
                .landmarks
                .iter()
                .map(|&[x, y]| Vec2::new(x, y))
                .collect(),
            scale: self.scale,
            n_positions: num_agents,
            threshold: self.threshold,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Per-scenario configuration; the `world`, `fairness`, and `controller`
/// tables override the corresponding defaults field by field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_agents: usize,
    #[serde(default)]
    pub num_obstacles: usize,
    #[serde(default)]
    pub walls: Vec<WallSpec>,
    #[serde(default = "default_assignment_mode")]
    pub assignment_mode: AssignMode,
    #[serde(default)]
    pub fairness_reward_enabled: bool,
    #[serde(default)]
    pub formation: Option<FormationConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_episode_length")]
    pub episode_length: u32,
    #[serde(default)]
    pub world: WorldOverrides,
    #[serde(default)]
    pub fairness: FairnessOverrides,
    #[serde(default)]
    pub controller: ControllerOverrides,
}

fn default_assignment_mode() -> AssignMode {
    AssignMode::Optimal
}

fn default_episode_length() -> u32 {
    100
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_agents: 3,
            num_obstacles: 0,
            walls: Vec::new(),
            assignment_mode: AssignMode::Optimal,
            fairness_reward_enabled: false,
            formation: None,
            seed: 0,
            episode_length: 100,
            world: WorldOverrides::default(),
            fairness: FairnessOverrides::default(),
            controller: ControllerOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldOverrides {
    pub world_half_extent: Option<f64>,
    pub dt: Option<f64>,
    pub damping: Option<f64>,
    pub accel_magnitude: Option<f64>,
    pub max_speed: Option<f64>,
    pub sensing_radius: Option<f64>,
    pub agent_radius: Option<f64>,
    pub goal_radius: Option<f64>,
    pub obstacle_radius: Option<f64>,
    pub collision_penalty: Option<f64>,
    pub goal_reward: Option<f64>,
    pub done_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessOverrides {
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub tau0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerOverrides {
    pub avoid_gain: Option<f64>,
    pub avoid_range: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<ScenarioConfig> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_agents < 1 {
            return Err(Error::Config("num_agents must be >= 1".into()));
        }
        if self.episode_length < 1 {
            return Err(Error::Config("episode_length must be >= 1".into()));
        }
        for w in &self.walls {
            w.to_wall().validate()?;
        }
        if let Some(f) = &self.formation {
            f.to_spec(self.num_agents)?;
        }
        Ok(())
    }

    /// World parameters with the scenario's overrides applied.
    /// `done_threshold` defaults to `agent_radius + goal_radius` unless
    /// explicitly overridden.
    pub fn world_config(&self) -> WorldConfig {
        let base = WorldConfig::default();
        let agent_radius = self.world.agent_radius.unwrap_or(base.agent_radius);
        let goal_radius = self.world.goal_radius.unwrap_or(base.goal_radius);
        WorldConfig {
            world_half_extent: self
                .world
                .world_half_extent
                .unwrap_or(base.world_half_extent),
            dt: self.world.dt.unwrap_or(base.dt),
            damping: self.world.damping.unwrap_or(base.damping),
            accel_magnitude: self.world.accel_magnitude.unwrap_or(base.accel_magnitude),
            max_speed: self.world.max_speed.unwrap_or(base.max_speed),
            sensing_radius: self.world.sensing_radius.unwrap_or(base.sensing_radius),
            agent_radius,
            goal_radius,
            obstacle_radius: self.world.obstacle_radius.unwrap_or(base.obstacle_radius),
            episode_length: self.episode_length,
            collision_penalty: self
                .world
                .collision_penalty
                .unwrap_or(base.collision_penalty),
            goal_reward: self.world.goal_reward.unwrap_or(base.goal_reward),
            done_threshold: self
                .world
                .done_threshold
                .unwrap_or(agent_radius + goal_radius),
        }
    }

    pub fn fairness_config(&self) -> FairnessConfig {
        let base = FairnessConfig::default();
        FairnessConfig {
            epsilon: self.fairness.epsilon.unwrap_or(base.epsilon),
            lambda: self.fairness.lambda.unwrap_or(base.lambda),
            tau0: self.fairness.tau0.unwrap_or(base.tau0),
            fairness_reward_enabled: self.fairness_reward_enabled,
        }
    }

    pub fn variant(&self) -> Variant {
        Variant::from_settings(self.assignment_mode, self.fairness_reward_enabled)
    }

    /// Applies a variant preset (assignment mode x fairness reward flag).
    pub fn with_variant(&self, variant: Variant) -> ScenarioConfig {
        ScenarioConfig {
            assignment_mode: variant.assign_mode(),
            fairness_reward_enabled: variant.fairness_reward_enabled(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            num_agents = 3
            assignment_mode = "minmax"
            fairness_reward_enabled = true
            seed = 42
            "#,
        )
        .unwrap();
        assert_eq!(cfg.num_agents, 3);
        assert_eq!(cfg.assignment_mode, AssignMode::Minmax);
        assert!(cfg.fairness_reward_enabled);
        assert_eq!(cfg.episode_length, 100);
        assert_eq!(cfg.variant(), Variant::FaFr);
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = ScenarioConfig::from_toml_str("num_agents = 3\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn parses_walls_and_overrides() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            num_agents = 5
            num_obstacles = 2

            [[walls]]
            start = [-0.5, -0.8]
            end = [-0.5, 0.2]

            [world]
            sensing_radius = 0.7
            agent_radius = 0.04

            [fairness]
            lambda = 0.25
            "#,
        )
        .unwrap();
        assert_eq!(cfg.walls.len(), 1);
        let wc = cfg.world_config();
        assert_eq!(wc.sensing_radius, 0.7);
        assert_eq!(wc.agent_radius, 0.04);
        // done_threshold tracks the overridden radii.
        assert_eq!(wc.done_threshold, 0.04 + 0.05);
        assert_eq!(cfg.fairness_config().lambda, 0.25);
    }

    #[test]
    fn formation_n_positions_must_match_agents() {
        let err = ScenarioConfig::from_toml_str(
            r#"
            num_agents = 4

            [formation]
            shape = "circle"
            landmarks = [[0.0, 0.0]]
            scale = 0.5
            n_positions = 5
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_positions"));
    }

    #[test]
    fn unknown_shape_rejected() {
        let err = ScenarioConfig::from_toml_str(
            r#"
            num_agents = 4

            [formation]
            shape = "hexagon"
            landmarks = [[0.0, 0.0]]
            scale = 0.5
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("hexagon"));
    }

    #[test]
    fn variant_presets_cover_the_grid() {
        let base = ScenarioConfig::default();
        let labels: Vec<&str> = Variant::ALL.iter().map(|v| v.label()).collect();
        assert_eq!(labels, vec!["ra", "oa", "fa", "fa_fr"]);
        for v in Variant::ALL {
            let cfg = base.with_variant(v);
            assert_eq!(cfg.variant(), v);
        }
    }
}
