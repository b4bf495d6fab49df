//! Episode and batch execution with the four evaluation metrics
//! (fairness F, success rate S%, episode fraction T, total distance D)
//! and distributional summaries.

use crate::assignment::{self, Assignment};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::fairness;
use crate::formation;
use crate::observation;
use crate::policy::{
    scripted_action, ControllerConfig, ExternalPolicy, PolicyInput, TargetMode,
    DEFAULT_POLICY_TIMEOUT,
};
use crate::scenario::{AssignMode, ScenarioConfig};
use crate::trace::{
    encode_line, AgentRecord, FairnessRecord, SolverRecord, StepRecord, TraceHeader, TraceLine,
};
use crate::world::{self, Action, WorldState};
use serde::{Deserialize, Serialize};

/// How actions are produced during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySelection {
    /// Scripted controller chasing the ego observation's nearest goal.
    ScriptedEgo,
    /// Scripted controller chasing the step's assigned goal.
    ScriptedAssigned,
    /// External process speaking the line-delimited protocol.
    External { command: String },
}

impl PolicySelection {
    pub fn parse(name: &str, external_cmd: Option<&str>) -> Result<PolicySelection> {
        match name {
            "scripted-ego" => Ok(PolicySelection::ScriptedEgo),
            "scripted-assigned" => Ok(PolicySelection::ScriptedAssigned),
            "external" => match external_cmd {
                Some(cmd) if !cmd.trim().is_empty() => Ok(PolicySelection::External {
                    command: cmd.to_string(),
                }),
                _ => Err(Error::Config(
                    "--policy external requires --external-cmd".into(),
                )),
            },
            other => Err(Error::Config(format!(
                "unknown policy {other:?} (expected scripted-ego, scripted-assigned, or external)"
            ))),
        }
    }
}

/// The four paper metrics plus bookkeeping for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub seed: u64,
    /// Fairness F over final cumulative distances.
    pub fairness: f64,
    /// Percentage of agents that reached unique goals (or, in formation
    /// scenarios, satisfied the per-shape success criterion).
    pub success_pct: f64,
    /// Step of the last arrival over episode length; 1 if anyone failed.
    pub episode_fraction: f64,
    /// Total distance traveled by the team.
    pub total_distance: f64,
    pub per_agent_distances: Vec<f64>,
    pub collision_count: usize,
}

impl EpisodeMetrics {
    pub fn csv_header() -> &'static str {
        "seed,F,S_pct,T,D,collisions"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.seed,
            self.fairness,
            self.success_pct,
            self.episode_fraction,
            self.total_distance,
            self.collision_count
        )
    }
}

/// Runs one episode from a freshly initialized world.
pub fn run_episode(
    scenario: &ScenarioConfig,
    policy: &PolicySelection,
    seed: u64,
    trace: Option<&mut Vec<String>>,
) -> Result<EpisodeMetrics> {
    let state = world::init_world(&scenario.world_config(), scenario, world::derive_seed(seed, 0))?;
    run_episode_from_state(scenario, policy, seed, state, trace)
}

/// Runs one episode from an explicit initial state (exposed for tests and
/// trace tooling; `run_episode` is the normal entry point).
pub fn run_episode_from_state(
    scenario: &ScenarioConfig,
    policy: &PolicySelection,
    seed: u64,
    mut state: WorldState,
    mut trace: Option<&mut Vec<String>>,
) -> Result<EpisodeMetrics> {
    let world_cfg = scenario.world_config();
    let fairness_cfg = scenario.fairness_config();
    let n = state.num_agents();
    if n < 2 {
        return Err(Error::Config(
            "episodes need at least 2 agents (the fairness metric is undefined otherwise)".into(),
        ));
    }

    let controller = {
        let base = ControllerConfig::new(match policy {
            PolicySelection::ScriptedAssigned => TargetMode::FixedAssignment,
            _ => TargetMode::EgoGoal1,
        });
        ControllerConfig {
            avoid_gain: scenario.controller.avoid_gain.unwrap_or(base.avoid_gain),
            avoid_range: scenario.controller.avoid_range.unwrap_or(base.avoid_range),
            ..base
        }
    };
    controller.validate(&world_cfg)?;

    let mut external = match policy {
        PolicySelection::External { command } => {
            Some(ExternalPolicy::spawn(command, DEFAULT_POLICY_TIMEOUT)?)
        }
        _ => None,
    };

    let random_assignment = match scenario.assignment_mode {
        AssignMode::Random => Some(assignment::assign_random(n, world::derive_seed(seed, 1))),
        _ => None,
    };

    if let Some(out) = trace.as_deref_mut() {
        out.push(encode_line(&TraceLine::Header(TraceHeader {
            seed,
            assignment_mode: scenario.assignment_mode,
            fairness_reward_enabled: scenario.fairness_reward_enabled,
            world: world_cfg.clone(),
            epsilon: fairness_cfg.epsilon,
            lambda: fairness_cfg.lambda,
            tau0: fairness_cfg.tau0,
            goals: state.goals.iter().map(|g| g.position).collect(),
            obstacles: state.obstacles.clone(),
            walls: state.walls.clone(),
            initial_agents: state.agents.iter().map(AgentRecord::from).collect(),
        })));
    }

    let mut collision_count = 0usize;
    for _ in 0..world_cfg.episode_length {
        if state.all_done() {
            break;
        }

        // Both solvers run every step: the scenario's mode picks which one
        // feeds rewards (and the fixed-assignment controller); the pair is
        // recorded for the dominance check.
        let cost = assignment::build_cost_matrix(&state);
        let optimal = assignment::assign_optimal(&cost);
        let fair = assignment::assign_minmax_fair(&cost)?;
        let assignment = match scenario.assignment_mode {
            AssignMode::Random => random_assignment.clone().expect("fixed RA permutation"),
            AssignMode::Optimal => optimal.clone(),
            AssignMode::Minmax => fair.clone(),
        };

        let inputs: Vec<PolicyInput> = (0..n)
            .map(|i| PolicyInput {
                ego: observation::observe(&state, i, &world_cfg),
                graph: observation::build_graph(&state, i, &world_cfg),
                agent: i,
                step: state.step_index,
            })
            .collect();

        let actions: Vec<Action> = match (&mut external, policy) {
            (Some(bridge), _) => bridge.exchange(state.step_index, &inputs)?,
            (None, _) => inputs
                .iter()
                .enumerate()
                .map(|(i, input)| {
                    if state.agents[i].done {
                        Action::Noop
                    } else {
                        let target = match controller.target_mode {
                            TargetMode::FixedAssignment => {
                                Some(state.goals[assignment.goal_of[i]].position)
                            }
                            TargetMode::EgoGoal1 => None,
                        };
                        scripted_action(input, target, &controller, &world_cfg)
                    }
                })
                .collect(),
        };

        let outcome = dynamics::step(&state, &actions, &world_cfg)?;
        collision_count += outcome.collisions.len();

        let distances: Vec<f64> = outcome
            .new_state
            .agents
            .iter()
            .map(|a| a.distance_traveled)
            .collect();
        let snapshot = fairness::fairness_metric(&distances, fairness_cfg.epsilon)?;
        let rewards =
            fairness::total_reward(&assignment, &outcome, &snapshot, &fairness_cfg, &world_cfg);

        if let Some(out) = trace.as_deref_mut() {
            out.push(encode_line(&TraceLine::Step(StepRecord {
                step: outcome.new_state.step_index,
                assignment: assignment.clone(),
                oa: SolverRecord::new(&optimal, &cost),
                fa: SolverRecord::new(&fair, &cost),
                agents: outcome.new_state.agents.iter().map(AgentRecord::from).collect(),
                collisions: outcome.collisions.clone(),
                newly_done: outcome.newly_done.clone(),
                rewards,
                fairness: FairnessRecord::from(&snapshot),
            })));
        }

        state = outcome.new_state;
    }

    let distances: Vec<f64> = state.agents.iter().map(|a| a.distance_traveled).collect();
    let final_snapshot = fairness::fairness_metric(&distances, fairness_cfg.epsilon)?;
    let success_pct = match &scenario.formation {
        Some(form) => {
            let spec = form.to_spec(n)?;
            formation::formation_success(&state, &spec).1
        }
        None => {
            let done = state
                .agents
                .iter()
                .filter(|a| a.done && a.claimed_goal.is_some())
                .count();
            100.0 * done as f64 / n as f64
        }
    };
    let episode_fraction = if state.all_done() {
        let last = state
            .agents
            .iter()
            .filter_map(|a| a.done_step)
            .max()
            .unwrap_or(0);
        last as f64 / world_cfg.episode_length as f64
    } else {
        1.0
    };

    Ok(EpisodeMetrics {
        seed,
        fairness: final_snapshot.fairness,
        success_pct,
        episode_fraction,
        total_distance: distances.iter().sum(),
        per_agent_distances: distances,
        collision_count,
    })
}

/// Median, mean, and the 10th/90th percentiles of one metric over a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub median: f64,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Percentile by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

impl MetricStats {
    pub fn from_values(values: &[f64]) -> MetricStats {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        MetricStats {
            median: percentile(&sorted, 50.0),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p10: percentile(&sorted, 10.0),
            p90: percentile(&sorted, 90.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub variant: String,
    pub num_agents: usize,
    pub episodes: usize,
    pub fairness: MetricStats,
    pub success_pct: MetricStats,
    pub episode_fraction: MetricStats,
    pub total_distance: MetricStats,
    pub collisions: MetricStats,
}

impl BatchSummary {
    pub fn from_episodes(scenario: &ScenarioConfig, rows: &[EpisodeMetrics]) -> BatchSummary {
        let collect = |f: fn(&EpisodeMetrics) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
        BatchSummary {
            variant: scenario.variant().label().to_string(),
            num_agents: scenario.num_agents,
            episodes: rows.len(),
            fairness: MetricStats::from_values(&collect(|m| m.fairness)),
            success_pct: MetricStats::from_values(&collect(|m| m.success_pct)),
            episode_fraction: MetricStats::from_values(&collect(|m| m.episode_fraction)),
            total_distance: MetricStats::from_values(&collect(|m| m.total_distance)),
            collisions: MetricStats::from_values(&collect(|m| m.collision_count as f64)),
        }
    }

    /// One-line summary in the layout of the paper's comparison tables.
    pub fn summary_line(&self) -> String {
        format!(
            "{:<6} agents={:<3} episodes={:<4} F_median={:.4} S_mean={:.1}% T_median={:.3} D_median={:.4}",
            self.variant,
            self.num_agents,
            self.episodes,
            self.fairness.median,
            self.success_pct.mean,
            self.episode_fraction.median,
            self.total_distance.median
        )
    }
}

/// Result of a batch: summary, per-episode rows, and (optionally) the
/// concatenated trace of every episode in seed order.
pub struct BatchResult {
    pub summary: BatchSummary,
    pub episodes: Vec<EpisodeMetrics>,
    pub trace: Option<String>,
}

/// Thread cap from FAIRNAV_THREADS (absent or unparsable means default).
pub fn thread_cap() -> Option<usize> {
    std::env::var("FAIRNAV_THREADS")
        .ok()
        .and_then(|raw| raw.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
}

/// Runs `episodes` independent episodes with seeds base_seed.. in parallel
/// and aggregates. Deterministic: each episode owns its seed, and results
/// are ordered by episode index regardless of scheduling.
pub fn run_batch(
    scenario: &ScenarioConfig,
    policy: &PolicySelection,
    episodes: usize,
    base_seed: u64,
    with_trace: bool,
) -> Result<BatchResult> {
    if episodes < 1 {
        return Err(Error::Config("episodes must be >= 1".into()));
    }
    let run_all = || -> Vec<Result<(EpisodeMetrics, Option<Vec<String>>)>> {
        use rayon::prelude::*;
        (0..episodes)
            .into_par_iter()
            .map(|k| {
                let seed = base_seed + k as u64;
                let mut lines = with_trace.then(Vec::new);
                let metrics = run_episode(scenario, policy, seed, lines.as_mut())?;
                Ok((metrics, lines))
            })
            .collect()
    };
    let results = match thread_cap() {
        Some(cap) => rayon::ThreadPoolBuilder::new()
            .num_threads(cap)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    let mut rows = Vec::with_capacity(episodes);
    let mut trace = with_trace.then(String::new);
    for result in results {
        let (metrics, lines) = result?;
        rows.push(metrics);
        if let (Some(buffer), Some(lines)) = (trace.as_mut(), lines) {
            for line in lines {
                buffer.push_str(&line);
                buffer.push('\n');
            }
        }
    }
    Ok(BatchResult {
        summary: BatchSummary::from_episodes(scenario, &rows),
        episodes: rows,
        trace,
    })
}

/// Per-episode CSV (header plus one row per episode).
pub fn episodes_csv(rows: &[EpisodeMetrics]) -> String {
    let mut out = String::from(EpisodeMetrics::csv_header());
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, validate_trace};
    use crate::vec2::Vec2;
    use crate::world::{AgentState, GoalState};

    fn quick_scenario(num_agents: usize, mode: AssignMode) -> ScenarioConfig {
        ScenarioConfig {
            num_agents,
            assignment_mode: mode,
            episode_length: 100,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn batch_of_one_has_degenerate_stats() {
        let scenario = quick_scenario(3, AssignMode::Optimal);
        let batch = run_batch(&scenario, &PolicySelection::ScriptedAssigned, 1, 5, false).unwrap();
        assert_eq!(batch.episodes.len(), 1);
        let m = &batch.episodes[0];
        assert_eq!(batch.summary.fairness.median, m.fairness);
        assert_eq!(batch.summary.fairness.mean, m.fairness);
        assert_eq!(batch.summary.total_distance.p10, m.total_distance);
        assert_eq!(batch.summary.total_distance.p90, m.total_distance);
    }

    #[test]
    fn batches_are_deterministic() {
        let scenario = quick_scenario(3, AssignMode::Minmax);
        let a = run_batch(&scenario, &PolicySelection::ScriptedAssigned, 5, 100, true).unwrap();
        let b = run_batch(&scenario, &PolicySelection::ScriptedAssigned, 5, 100, true).unwrap();
        assert_eq!(a.episodes, b.episodes);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn traces_from_real_episodes_validate() {
        let scenario = ScenarioConfig {
            fairness_reward_enabled: true,
            ..quick_scenario(3, AssignMode::Minmax)
        };
        let batch = run_batch(&scenario, &PolicySelection::ScriptedAssigned, 3, 7, true).unwrap();
        let lines = parse_trace(batch.trace.as_deref().unwrap()).unwrap();
        let validated = validate_trace(&lines).unwrap();
        assert!(validated > 0);
    }

    #[test]
    fn degenerate_start_finishes_at_step_one() {
        let scenario = quick_scenario(3, AssignMode::Minmax);
        let world_cfg = scenario.world_config();
        let positions = [
            Vec2::new(-0.5, 0.0),
            Vec2::new(0.0, 0.5),
            Vec2::new(0.5, 0.0),
        ];
        let mut state = WorldState {
            step_index: 0,
            agents: positions.iter().map(|&p| AgentState::at(p)).collect(),
            goals: positions.iter().map(|&p| GoalState::at(p)).collect(),
            obstacles: vec![],
            walls: vec![],
            landmarks: vec![],
        };
        crate::observation::refresh_occupancy_flags(&mut state);
        let metrics = run_episode_from_state(
            &scenario,
            &PolicySelection::ScriptedAssigned,
            0,
            state,
            None,
        )
        .unwrap();
        assert_eq!(metrics.success_pct, 100.0);
        assert_eq!(metrics.episode_fraction, 1.0 / world_cfg.episode_length as f64);
        assert!(metrics.total_distance < 1e-9);
    }

    #[test]
    fn unfinished_agents_pin_the_episode_fraction_to_one() {
        // Two steps are nowhere near enough to cross the arena.
        let scenario = ScenarioConfig {
            episode_length: 2,
            ..quick_scenario(3, AssignMode::Optimal)
        };
        let metrics =
            run_episode(&scenario, &PolicySelection::ScriptedAssigned, 3, None).unwrap();
        assert_eq!(metrics.episode_fraction, 1.0);
        assert!(metrics.success_pct < 100.0);
    }

    #[test]
    fn single_agent_episodes_are_rejected() {
        let scenario = quick_scenario(1, AssignMode::Optimal);
        let err = run_episode(&scenario, &PolicySelection::ScriptedEgo, 0, None).unwrap_err();
        assert!(err.to_string().contains("at least 2 agents"));
    }

    #[test]
    fn percentiles_interpolate_linearly() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&sorted, 50.0), 2.5);
        assert_eq!(percentile(&sorted, 0.0), 1.0);
        assert_eq!(percentile(&sorted, 100.0), 4.0);
        assert!((percentile(&sorted, 10.0) - 1.3).abs() < 1e-12);
        let stats = MetricStats::from_values(&[4.0, 1.0, 3.0, 2.0]);
        assert!(stats.p10 <= stats.median && stats.median <= stats.p90);
    }

    #[test]
    fn policy_selection_parsing() {
        assert_eq!(
            PolicySelection::parse("scripted-ego", None).unwrap(),
            PolicySelection::ScriptedEgo
        );
        assert!(PolicySelection::parse("external", None).is_err());
        assert!(PolicySelection::parse("mystery", None).is_err());
    }
}
