//! One-step world transition: damped double-integrator dynamics for the
//! discrete acceleration actions, goal claiming, collision detection, and
//! death-masking for done agents.
//!
//! Collisions are penalty events only; overlapping entities interpenetrate
//! and are reported, never pushed.

use crate::error::{Error, Result};
use crate::observation;
use crate::world::{Action, EntityId, WorldConfig, WorldState};

/// Result of advancing the world by one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub new_state: WorldState,
    /// Collision events at the new positions; agent-agent pairs appear once
    /// with the lower index first.
    pub collisions: Vec<(usize, EntityId)>,
    /// Agents that reached a free goal this step.
    pub newly_done: Vec<usize>,
}

/// Advances the world one step.
///
/// For each non-done agent: v' = v * (1 - damping) + a * dt, clamped to
/// max_speed; p' = p + v' * dt, clamped to the arena with the velocity
/// zeroed on any clamped axis. Done agents ignore their action and stay
/// put. An agent that ends the step within done_threshold of an unclaimed
/// goal claims it; simultaneous claims resolve by lowest agent index.
pub fn step(state: &WorldState, actions: &[Action], config: &WorldConfig) -> Result<StepOutcome> {
    let n = state.agents.len();
    if actions.len() != n {
        return Err(Error::ActionCountMismatch {
            expected: n,
            got: actions.len(),
        });
    }
    if state.step_index >= config.episode_length {
        return Err(Error::StepOutOfRange {
            step: state.step_index,
            episode_length: config.episode_length,
        });
    }

    let mut next = state.clone();
    next.step_index = state.step_index + 1;
    let half = config.world_half_extent;

    for (agent, &action) in next.agents.iter_mut().zip(actions) {
        if agent.done {
            continue;
        }
        let accel = action.direction() * config.accel_magnitude;
        let mut v = agent.velocity * (1.0 - config.damping) + accel * config.dt;
        let speed = v.norm();
        if speed > config.max_speed {
            v = v * (config.max_speed / speed);
        }
        let before = agent.position;
        let mut p = before + v * config.dt;
        if p.x.abs() > half {
            p.x = p.x.clamp(-half, half);
            v.x = 0.0;
        }
        if p.y.abs() > half {
            p.y = p.y.clamp(-half, half);
            v.y = 0.0;
        }
        agent.velocity = v;
        agent.position = p;
        agent.distance_traveled += (p - before).norm();
    }

    // Goal claiming, lowest agent index first.
    let mut newly_done = Vec::new();
    for i in 0..n {
        if next.agents[i].done {
            continue;
        }
        let p = next.agents[i].position;
        let nearest_free = next
            .goals
            .iter()
            .enumerate()
            .filter(|(_, g)| g.claimed_by.is_none())
            .map(|(j, g)| (j, p.distance(g.position)))
            .filter(|&(_, d)| d <= config.done_threshold)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        if let Some((j, _)) = nearest_free {
            next.agents[i].done = true;
            next.agents[i].done_step = Some(next.step_index);
            next.agents[i].claimed_goal = Some(j);
            next.goals[j].claimed_by = Some(i);
            newly_done.push(i);
        }
    }

    let collisions = detect_collisions(&next, config);
    observation::refresh_occupancy_flags(&mut next);

    Ok(StepOutcome {
        new_state: next,
        collisions,
        newly_done,
    })
}

/// All collision pairs at the given state: agent-agent (each unordered pair
/// once), agent-obstacle, and agent-wall penetrations. Done agents exchange
/// no collision interaction. Contact at exactly the sum of radii does not
/// count (strict inequality).
pub fn detect_collisions(state: &WorldState, config: &WorldConfig) -> Vec<(usize, EntityId)> {
    let mut out = Vec::new();
    let n = state.agents.len();
    for i in 0..n {
        if state.agents[i].done {
            continue;
        }
        let p = state.agents[i].position;
        for j in (i + 1)..n {
            if state.agents[j].done {
                continue;
            }
            if p.distance(state.agents[j].position) < 2.0 * config.agent_radius {
                out.push((i, EntityId::Agent(j)));
            }
        }
        for (k, o) in state.obstacles.iter().enumerate() {
            if p.distance(o.position) < config.agent_radius + o.radius {
                out.push((i, EntityId::Obstacle(k)));
            }
        }
        for (k, w) in state.walls.iter().enumerate() {
            if w.distance_to(p) < config.agent_radius {
                out.push((i, EntityId::Wall(k)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2::Vec2;
    use crate::world::{AgentState, GoalState, Obstacle, Wall};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bare_state(agents: Vec<AgentState>, goals: Vec<GoalState>) -> WorldState {
        WorldState {
            step_index: 0,
            agents,
            goals,
            obstacles: vec![],
            walls: vec![],
            landmarks: vec![],
        }
    }

    fn far_goals(n: usize) -> Vec<GoalState> {
        (0..n)
            .map(|k| GoalState::at(Vec2::new(-0.9 + 0.3 * k as f64, -0.9)))
            .collect()
    }

    #[test]
    fn hand_computed_single_step() {
        let config = WorldConfig::default();
        let state = bare_state(vec![AgentState::at(Vec2::ZERO)], far_goals(1));
        let out = step(&state, &[Action::AccelPlusX], &config).unwrap();
        let agent = &out.new_state.agents[0];
        assert_eq!(agent.velocity, Vec2::new(0.05, 0.0));
        assert_eq!(agent.position, Vec2::new(0.005, 0.0));
        assert_eq!(agent.distance_traveled, 0.005);
        assert_eq!(out.new_state.step_index, 1);
    }

    #[test]
    fn done_agents_ignore_actions() {
        let config = WorldConfig::default();
        let mut agent = AgentState::at(Vec2::new(0.3, 0.3));
        agent.velocity = Vec2::new(0.5, 0.0);
        agent.done = true;
        agent.done_step = Some(2);
        agent.claimed_goal = Some(0);
        agent.distance_traveled = 1.25;
        let mut goals = far_goals(1);
        goals[0].claimed_by = Some(0);
        let state = bare_state(vec![agent.clone()], goals);
        let out = step(&state, &[Action::AccelPlusX], &config).unwrap();
        assert_eq!(out.new_state.agents[0].position, agent.position);
        assert_eq!(out.new_state.agents[0].distance_traveled, 1.25);
        assert!(out.newly_done.is_empty());
    }

    #[test]
    fn overlapping_agents_collide() {
        let config = WorldConfig::default();
        let state = bare_state(
            vec![
                AgentState::at(Vec2::new(0.0, 0.0)),
                AgentState::at(Vec2::new(0.08, 0.0)),
            ],
            far_goals(2),
        );
        let pairs = detect_collisions(&state, &config);
        assert_eq!(pairs, vec![(0, EntityId::Agent(1))]);
    }

    #[test]
    fn contact_at_exact_radius_sum_is_not_a_collision() {
        let config = WorldConfig::default();
        let state = WorldState {
            obstacles: vec![Obstacle {
                position: Vec2::new(0.15, 0.0),
                radius: config.obstacle_radius,
            }],
            ..bare_state(vec![AgentState::at(Vec2::ZERO)], far_goals(1))
        };
        // Center distance exactly agent_radius + obstacle_radius.
        assert!(detect_collisions(&state, &config).is_empty());
    }

    #[test]
    fn three_overlapping_agents_give_three_pairs() {
        let config = WorldConfig::default();
        let state = bare_state(
            vec![
                AgentState::at(Vec2::new(0.0, 0.0)),
                AgentState::at(Vec2::new(0.05, 0.0)),
                AgentState::at(Vec2::new(0.0, 0.05)),
            ],
            far_goals(3),
        );
        let pairs = detect_collisions(&state, &config);
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn lone_agent_has_no_collisions() {
        let config = WorldConfig::default();
        let state = bare_state(vec![AgentState::at(Vec2::ZERO)], far_goals(1));
        assert!(detect_collisions(&state, &config).is_empty());
    }

    #[test]
    fn done_agents_do_not_collide() {
        let config = WorldConfig::default();
        let mut a = AgentState::at(Vec2::new(0.0, 0.0));
        a.done = true;
        let b = AgentState::at(Vec2::new(0.05, 0.0));
        let state = bare_state(vec![a, b], far_goals(2));
        assert!(detect_collisions(&state, &config).is_empty());
    }

    #[test]
    fn wall_penetration_is_detected() {
        let config = WorldConfig::default();
        let state = WorldState {
            walls: vec![Wall {
                a: Vec2::new(0.0, -0.5),
                b: Vec2::new(0.0, 0.5),
                thickness: 0.02,
            }],
            ..bare_state(vec![AgentState::at(Vec2::new(0.03, 0.0))], far_goals(1))
        };
        assert_eq!(
            detect_collisions(&state, &config),
            vec![(0, EntityId::Wall(0))]
        );
    }

    #[test]
    fn claiming_is_exclusive_and_lowest_index_wins() {
        let config = WorldConfig::default();
        let goal = GoalState::at(Vec2::new(0.0, 0.0));
        let state = bare_state(
            vec![
                AgentState::at(Vec2::new(0.05, 0.0)),
                AgentState::at(Vec2::new(-0.04, 0.0)),
            ],
            vec![goal, GoalState::at(Vec2::new(0.9, 0.9))],
        );
        let out = step(&state, &[Action::Noop, Action::Noop], &config).unwrap();
        assert_eq!(out.newly_done, vec![0]);
        assert_eq!(out.new_state.agents[0].claimed_goal, Some(0));
        assert_eq!(out.new_state.goals[0].claimed_by, Some(0));
        assert!(!out.new_state.agents[1].done);
    }

    #[test]
    fn determinism_of_step() {
        let config = WorldConfig::default();
        let state = bare_state(
            vec![
                AgentState::at(Vec2::new(0.1, -0.2)),
                AgentState::at(Vec2::new(-0.3, 0.4)),
            ],
            far_goals(2),
        );
        let actions = [Action::AccelMinusY, Action::AccelPlusX];
        let a = step(&state, &actions, &config).unwrap();
        let b = step(&state, &actions, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn action_count_mismatch_is_an_error() {
        let config = WorldConfig::default();
        let state = bare_state(vec![AgentState::at(Vec2::ZERO)], far_goals(1));
        assert!(matches!(
            step(&state, &[], &config),
            Err(Error::ActionCountMismatch { .. })
        ));
    }

    #[test]
    fn arena_clamp_zeroes_velocity_component() {
        let config = WorldConfig::default();
        let mut agent = AgentState::at(Vec2::new(1.0, 0.0));
        agent.velocity = Vec2::new(1.0, 0.0);
        let state = bare_state(vec![agent], far_goals(1));
        let out = step(&state, &[Action::AccelPlusX], &config).unwrap();
        let a = &out.new_state.agents[0];
        assert_eq!(a.position.x, 1.0);
        assert_eq!(a.velocity.x, 0.0);
    }

    #[test]
    fn speed_bound_containment_and_additivity_over_random_steps() {
        let config = WorldConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut state = bare_state(
            vec![
                AgentState::at(Vec2::new(0.5, 0.5)),
                AgentState::at(Vec2::new(-0.5, -0.5)),
                AgentState::at(Vec2::new(0.5, -0.5)),
            ],
            far_goals(3),
        );
        let mut independent = vec![0.0f64; 3];
        let mut prev_positions: Vec<Vec2> = state.agents.iter().map(|a| a.position).collect();
        let mut done_count = 0usize;
        for t in 0..2000 {
            if state.step_index >= config.episode_length {
                state.step_index = 0; // keep stepping past episode length for the property
            }
            let actions: Vec<Action> = (0..3)
                .map(|_| Action::ALL[rng.gen_range(0..5)])
                .collect();
            let out = step(&state, &actions, &config).unwrap();
            for (i, a) in out.new_state.agents.iter().enumerate() {
                assert!(a.velocity.norm() <= config.max_speed + 1e-12, "step {t}");
                assert!(a.position.x.abs() <= config.world_half_extent);
                assert!(a.position.y.abs() <= config.world_half_extent);
                independent[i] += a.position.distance(prev_positions[i]);
                assert!((a.distance_traveled - independent[i]).abs() < 1e-9);
                prev_positions[i] = a.position;
            }
            let now_done = out.new_state.agents.iter().filter(|a| a.done).count();
            assert!(now_done >= done_count, "done set shrank");
            done_count = now_done;
            state = out.new_state;
        }
    }
}
