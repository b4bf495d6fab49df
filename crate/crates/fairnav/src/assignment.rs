//! Agent-goal assignment: cost matrix construction plus the three solvers
//! (random, linear-sum optimal, min-max fair) and a brute-force oracle.
//!
//! The min-max fair solver computes the full lexicographic bottleneck
//! assignment: its sorted-descending cost vector is lexicographically
//! minimal over all permutations, not just the largest entry.

use crate::error::{Error, Result};
use crate::world::WorldState;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest instance the factorial brute-force oracle accepts.
pub const BRUTE_FORCE_MAX: usize = 9;
/// Largest instance the bottleneck solver's bitmask bookkeeping supports.
pub const MINMAX_MAX: usize = 64;

/// Square table of nonnegative agent-to-goal costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    costs: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn new(costs: Vec<Vec<f64>>) -> Result<CostMatrix> {
        let n = costs.len();
        if n == 0 {
            return Err(Error::CostMatrix("matrix must be non-empty".into()));
        }
        for row in &costs {
            if row.len() != n {
                return Err(Error::CostMatrix(format!(
                    "matrix must be square ({n}x{n}); found a row of length {}",
                    row.len()
                )));
            }
            for &c in row {
                if !c.is_finite() {
                    return Err(Error::CostMatrix("costs must be finite".into()));
                }
                if c < 0.0 {
                    return Err(Error::CostMatrix("costs must be nonnegative".into()));
                }
            }
        }
        Ok(CostMatrix { costs })
    }

    pub fn n(&self) -> usize {
        self.costs.len()
    }

    pub fn cost(&self, agent: usize, goal: usize) -> f64 {
        self.costs[agent][goal]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.costs
    }
}

/// The assignment mode that produced a permutation.
pub use crate::scenario::AssignMode;

/// One-to-one matching of agents to goals: `goal_of[i]` is agent i's goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub goal_of: Vec<usize>,
    pub mode: AssignMode,
}

impl Assignment {
    pub fn is_permutation(&self) -> bool {
        let n = self.goal_of.len();
        let mut seen = vec![false; n];
        self.goal_of.iter().all(|&g| {
            if g < n && !seen[g] {
                seen[g] = true;
                true
            } else {
                false
            }
        })
    }

    /// Sum of assigned costs, accumulated in agent order.
    pub fn total_cost(&self, c: &CostMatrix) -> f64 {
        self.goal_of
            .iter()
            .enumerate()
            .fold(0.0, |acc, (i, &j)| acc + c.cost(i, j))
    }

    /// Largest assigned cost.
    pub fn max_cost(&self, c: &CostMatrix) -> f64 {
        self.goal_of
            .iter()
            .enumerate()
            .map(|(i, &j)| c.cost(i, j))
            .fold(0.0, f64::max)
    }

    /// Assigned costs sorted in descending order.
    pub fn sorted_costs_desc(&self, c: &CostMatrix) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .goal_of
            .iter()
            .enumerate()
            .map(|(i, &j)| c.cost(i, j))
            .collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }
}

/// Euclidean distances from every agent to every goal at the current
/// positions; recomputed from scratch each step.
pub fn build_cost_matrix(state: &WorldState) -> CostMatrix {
    let costs = state
        .agents
        .iter()
        .map(|a| {
            state
                .goals
                .iter()
                .map(|g| a.position.distance(g.position))
                .collect()
        })
        .collect();
    CostMatrix::new(costs).expect("distances form a valid cost matrix")
}

/// Uniformly random permutation drawn once per episode; deterministic per
/// seed.
pub fn assign_random(n: usize, seed: u64) -> Assignment {
    let mut goal_of: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    goal_of.shuffle(&mut rng);
    Assignment {
        goal_of,
        mode: AssignMode::Random,
    }
}

/// O(n^3) shortest-augmenting-path solver for the linear sum assignment
/// problem. Returns some optimal permutation (no tie-break guarantees).
fn hungarian(c: &CostMatrix) -> Vec<usize> {
    let n = c.n();
    // Dual potentials and matching, 1-indexed with column 0 as scratch.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let reduced = c.cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if reduced < min_slack[j] {
                        min_slack[j] = reduced;
                        way[j] = j0;
                    }
                    if min_slack[j] < delta {
                        delta = min_slack[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path back to the scratch column.
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut goal_of = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] > 0 {
            goal_of[matched_row[j] - 1] = j - 1;
        }
    }
    goal_of
}

/// Total cost of assigning `sub_rows` to `sub_cols` optimally, where the
/// index lists select a minor of `c`. Returns the minor's optimal column
/// choices as indices into `sub_cols`.
fn hungarian_minor(c: &CostMatrix, sub_rows: &[usize], sub_cols: &[usize]) -> Vec<usize> {
    let minor: Vec<Vec<f64>> = sub_rows
        .iter()
        .map(|&i| sub_cols.iter().map(|&j| c.cost(i, j)).collect())
        .collect();
    if minor.is_empty() {
        return Vec::new();
    }
    let minor = CostMatrix::new(minor).expect("minor of a valid matrix is valid");
    hungarian(&minor)
}

/// Minimizes the total assigned cost; among optimal permutations, returns
/// the lexicographically smallest `goal_of`.
pub fn assign_optimal(c: &CostMatrix) -> Assignment {
    let n = c.n();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut goal_of = Vec::with_capacity(n);
    for i in 0..n {
        let tail_rows: Vec<usize> = ((i + 1)..n).collect();
        let mut best: Option<(f64, usize)> = None;
        for (pos, &j) in remaining.iter().enumerate() {
            let mut tail_cols = remaining.clone();
            tail_cols.remove(pos);
            let completion = hungarian_minor(c, &tail_rows, &tail_cols);
            // Assemble the full candidate permutation and fold its total in
            // agent order so float totals compare identically to the oracle's.
            let mut candidate = goal_of.clone();
            candidate.push(j);
            for &col_pos in &completion {
                candidate.push(tail_cols[col_pos]);
            }
            let total = candidate
                .iter()
                .enumerate()
                .fold(0.0, |acc, (row, &col)| acc + c.cost(row, col));
            if best.map_or(true, |(bt, _)| total < bt) {
                best = Some((total, pos));
            }
        }
        let (_, pos) = best.expect("non-empty candidate set");
        goal_of.push(remaining.remove(pos));
    }
    Assignment {
        goal_of,
        mode: AssignMode::Optimal,
    }
}

/// Kuhn's augmenting-path matching over the edges of a masked minor with
/// cost <= threshold. Returns a maximum matching size and, if perfect, the
/// column matched to each row.
fn threshold_matching(
    c: &CostMatrix,
    rows: &[usize],
    cols: &[usize],
    threshold: f64,
) -> Option<Vec<usize>> {
    let k = rows.len();
    let mut col_match: Vec<Option<usize>> = vec![None; k]; // col pos -> row pos
    fn try_augment(
        c: &CostMatrix,
        rows: &[usize],
        cols: &[usize],
        threshold: f64,
        row_pos: usize,
        visited: &mut [bool],
        col_match: &mut [Option<usize>],
    ) -> bool {
        for col_pos in 0..cols.len() {
            if !visited[col_pos] && c.cost(rows[row_pos], cols[col_pos]) <= threshold {
                visited[col_pos] = true;
                let free = match col_match[col_pos] {
                    None => true,
                    Some(other) => {
                        try_augment(c, rows, cols, threshold, other, visited, col_match)
                    }
                };
                if free {
                    col_match[col_pos] = Some(row_pos);
                    return true;
                }
            }
        }
        false
    }
    for row_pos in 0..k {
        let mut visited = vec![false; k];
        if !try_augment(c, rows, cols, threshold, row_pos, &mut visited, &mut col_match) {
            return None;
        }
    }
    let mut row_to_col = vec![0usize; k];
    for (col_pos, rm) in col_match.iter().enumerate() {
        row_to_col[rm.expect("perfect matching")] = col_pos;
    }
    Some(row_to_col)
}

/// Smallest cost value z such that the minor admits a perfect matching on
/// edges with cost <= z. None if the minor is empty.
fn bottleneck_value(c: &CostMatrix, rows: &[usize], cols: &[usize]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let mut values: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| c.cost(i, j)))
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let mut lo = 0usize;
    let mut hi = values.len() - 1;
    // The full value set always admits a perfect matching (complete bipartite).
    while lo < hi {
        let mid = (lo + hi) / 2;
        if threshold_matching(c, rows, cols, values[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(values[lo])
}

/// Result of solving a minor lexicographically: the sorted-descending cost
/// vector and the chosen column (as position in the minor's column list)
/// for each row position.
type LexSolution = (Vec<f64>, Vec<usize>);

struct LexBottleneckSolver<'a> {
    c: &'a CostMatrix,
    memo: HashMap<(u64, u64), LexSolution>,
}

impl<'a> LexBottleneckSolver<'a> {
    fn new(c: &'a CostMatrix) -> Self {
        LexBottleneckSolver {
            c,
            memo: HashMap::new(),
        }
    }

    fn mask_of(indices: &[usize]) -> u64 {
        indices.iter().fold(0u64, |m, &i| m | (1u64 << i))
    }

    /// Lexicographically minimal (sorted-descending cost vector, then
    /// goal_of) over perfect matchings of the minor rows x cols.
    fn solve(&mut self, rows: &[usize], cols: &[usize]) -> LexSolution {
        if rows.is_empty() {
            return (Vec::new(), Vec::new());
        }
        let key = (Self::mask_of(rows), Self::mask_of(cols));
        if let Some(found) = self.memo.get(&key) {
            return found.clone();
        }

        let first = self.c.cost(rows[0], cols[0]);
        let uniform = rows
            .iter()
            .all(|&i| cols.iter().all(|&j| self.c.cost(i, j) == first));
        let solution = if uniform {
            // Every matching has the same cost vector; the identity pairing
            // is the lexicographically smallest goal_of.
            (vec![first; rows.len()], (0..rows.len()).collect())
        } else {
            self.solve_branching(rows, cols)
        };
        self.memo.insert(key, solution.clone());
        solution
    }

    fn solve_branching(&mut self, rows: &[usize], cols: &[usize]) -> LexSolution {
        let z = bottleneck_value(self.c, rows, cols).expect("non-empty minor");
        let mut best: Option<LexSolution> = None;
        for (row_pos, &i) in rows.iter().enumerate() {
            for (col_pos, &j) in cols.iter().enumerate() {
                if self.c.cost(i, j) != z {
                    continue;
                }
                let sub_rows: Vec<usize> = rows
                    .iter()
                    .copied()
                    .filter(|&r| r != i)
                    .collect();
                let sub_cols: Vec<usize> = cols
                    .iter()
                    .copied()
                    .filter(|&cc| cc != j)
                    .collect();
                let (sub_vec, sub_choice) = self.solve(&sub_rows, &sub_cols);
                // Candidates whose completion exceeds z produce a larger
                // leading entry and lose the comparison naturally.
                let mut vec_desc = Vec::with_capacity(rows.len());
                let mut inserted = false;
                for &value in &sub_vec {
                    if !inserted && z >= value {
                        vec_desc.push(z);
                        inserted = true;
                    }
                    vec_desc.push(value);
                }
                if !inserted {
                    vec_desc.push(z);
                }
                // Reassemble the minor's per-row column choices.
                let mut choice = vec![usize::MAX; rows.len()];
                choice[row_pos] = col_pos;
                let mut sub_iter = sub_choice.iter();
                for (rp, &r) in rows.iter().enumerate() {
                    if r == i {
                        continue;
                    }
                    let sc = *sub_iter.next().expect("one choice per sub-row");
                    let col = sub_cols[sc];
                    choice[rp] = cols.iter().position(|&cc| cc == col).unwrap();
                }
                let candidate = (vec_desc, choice);
                let better = match &best {
                    None => true,
                    Some(current) => lex_solution_less(&candidate, current),
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        best.expect("bottleneck value is attained by some edge")
    }
}

fn lex_solution_less(a: &LexSolution, b: &LexSolution) -> bool {
    for (x, y) in a.0.iter().zip(&b.0) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    a.1 < b.1
}

/// Lexicographic bottleneck assignment: minimizes the largest assigned
/// cost, then the second largest, and so on; ties on the full sorted
/// vector break toward the lexicographically smallest `goal_of`.
pub fn assign_minmax_fair(c: &CostMatrix) -> Result<Assignment> {
    let n = c.n();
    if n > MINMAX_MAX {
        return Err(Error::CostMatrix(format!(
            "min-max fair solver supports n <= {MINMAX_MAX}, got {n}"
        )));
    }
    let indices: Vec<usize> = (0..n).collect();
    let mut solver = LexBottleneckSolver::new(c);
    let (_, choice) = solver.solve(&indices, &indices);
    Ok(Assignment {
        goal_of: choice,
        mode: AssignMode::Minmax,
    })
}

/// Objective for the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteObjective {
    /// Minimize the total cost.
    Sum,
    /// Minimize the sorted-descending cost vector lexicographically.
    LexMax,
}

/// Exhaustive enumeration of all permutations; the independent oracle for
/// both fast solvers. Applies the same tie-break (lexicographically
/// smallest `goal_of`).
pub fn brute_force_assign(c: &CostMatrix, objective: BruteObjective) -> Result<Assignment> {
    let n = c.n();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::BruteForceSize {
            n,
            max: BRUTE_FORCE_MAX,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm: Option<Vec<usize>> = None;
    let mut best_sum = f64::INFINITY;
    let mut best_vec: Vec<f64> = Vec::new();
    let mut scratch: Vec<f64> = vec![0.0; n];

    let mut consider = |perm: &[usize],
                        best_perm: &mut Option<Vec<usize>>,
                        best_sum: &mut f64,
                        best_vec: &mut Vec<f64>,
                        scratch: &mut Vec<f64>| {
        match objective {
            BruteObjective::Sum => {
                let total = perm
                    .iter()
                    .enumerate()
                    .fold(0.0, |acc, (i, &j)| acc + c.cost(i, j));
                let better = total < *best_sum
                    || (total == *best_sum
                        && best_perm.as_deref().map_or(true, |bp| perm < bp));
                if better {
                    *best_sum = total;
                    *best_perm = Some(perm.to_vec());
                }
            }
            BruteObjective::LexMax => {
                scratch.clear();
                scratch.extend(perm.iter().enumerate().map(|(i, &j)| c.cost(i, j)));
                scratch.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let better = match best_perm.as_deref() {
                    None => true,
                    Some(bp) => {
                        let mut ordering = std::cmp::Ordering::Equal;
                        for (x, y) in scratch.iter().zip(best_vec.iter()) {
                            ordering = x.partial_cmp(y).unwrap();
                            if ordering != std::cmp::Ordering::Equal {
                                break;
                            }
                        }
                        ordering == std::cmp::Ordering::Less
                            || (ordering == std::cmp::Ordering::Equal && perm < bp)
                    }
                };
                if better {
                    best_vec.clear();
                    best_vec.extend_from_slice(scratch);
                    *best_perm = Some(perm.to_vec());
                }
            }
        }
    };

    // Heap's algorithm, iterative.
    consider(&perm, &mut best_perm, &mut best_sum, &mut best_vec, &mut scratch);
    let mut counters = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            consider(&perm, &mut best_perm, &mut best_sum, &mut best_vec, &mut scratch);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }

    Ok(Assignment {
        goal_of: best_perm.expect("at least one permutation"),
        mode: match objective {
            BruteObjective::Sum => AssignMode::Optimal,
            BruteObjective::LexMax => AssignMode::Minmax,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2::Vec2;
    use crate::world::{AgentState, GoalState, WorldState};
    use proptest::prelude::*;
    use rand::Rng;

    fn matrix(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix {
        let costs = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        CostMatrix::new(costs).unwrap()
    }

    #[test]
    fn cost_matrix_from_world_positions() {
        let state = WorldState {
            step_index: 0,
            agents: vec![
                AgentState::at(Vec2::new(0.0, 0.0)),
                AgentState::at(Vec2::new(1.0, 0.0)),
                AgentState::at(Vec2::new(0.0, 1.0)),
            ],
            goals: vec![
                GoalState::at(Vec2::new(3.0, 4.0)),
                GoalState::at(Vec2::new(0.0, 0.0)),
                GoalState::at(Vec2::new(1.0, 1.0)),
            ],
            obstacles: vec![],
            walls: vec![],
            landmarks: vec![],
        };
        let c = build_cost_matrix(&state);
        assert_eq!(c.cost(0, 0), 5.0);
        assert_eq!(c.cost(0, 1), 0.0);
        // Independent recomputation of each entry.
        for (i, a) in state.agents.iter().enumerate() {
            for (j, g) in state.goals.iter().enumerate() {
                let dx = a.position.x - g.position.x;
                let dy = a.position.y - g.position.y;
                assert_eq!(c.cost(i, j), (dx * dx + dy * dy).sqrt());
            }
        }
    }

    #[test]
    fn random_assignment_single_agent() {
        assert_eq!(assign_random(1, 99).goal_of, vec![0]);
    }

    #[test]
    fn random_assignment_deterministic_per_seed() {
        assert_eq!(assign_random(3, 17), assign_random(3, 17));
        assert_eq!(assign_random(8, 4).is_permutation(), true);
    }

    #[test]
    fn random_assignment_uniform_over_permutations() {
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let trials = 10_000usize;
        for seed in 0..trials as u64 {
            *counts.entry(assign_random(4, seed).goal_of).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        for (_, &count) in &counts {
            let freq = count as f64 / trials as f64;
            assert!((freq - 1.0 / 24.0).abs() < 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn optimal_picks_identity_on_example() {
        let c = matrix(&[&[1.0, 4.0], &[3.0, 5.0]]);
        let a = assign_optimal(&c);
        assert_eq!(a.goal_of, vec![0, 1]);
        assert_eq!(a.total_cost(&c), 6.0);
    }

    #[test]
    fn optimal_zero_diagonal_is_identity() {
        let c = matrix(&[
            &[0.0, 2.0, 3.0],
            &[2.0, 0.0, 4.0],
            &[3.0, 4.0, 0.0],
        ]);
        let a = assign_optimal(&c);
        assert_eq!(a.goal_of, vec![0, 1, 2]);
        assert_eq!(a.total_cost(&c), 0.0);
    }

    #[test]
    fn optimal_all_equal_ties_break_to_identity() {
        let c = matrix(&[&[2.0, 2.0, 2.0], &[2.0, 2.0, 2.0], &[2.0, 2.0, 2.0]]);
        assert_eq!(assign_optimal(&c).goal_of, vec![0, 1, 2]);
    }

    #[test]
    fn minmax_prefers_smaller_worst_case() {
        let c = matrix(&[&[1.0, 4.0], &[3.0, 5.0]]);
        let a = assign_minmax_fair(&c).unwrap();
        assert_eq!(a.goal_of, vec![1, 0]);
        assert_eq!(a.max_cost(&c), 4.0);
    }

    #[test]
    fn minmax_all_equal_ties_break_to_identity() {
        let c = matrix(&[&[7.0, 7.0, 7.0], &[7.0, 7.0, 7.0], &[7.0, 7.0, 7.0]]);
        assert_eq!(assign_minmax_fair(&c).unwrap().goal_of, vec![0, 1, 2]);
    }

    #[test]
    fn minmax_refines_below_the_bottleneck() {
        // Both permutations that achieve max cost 5 differ in their second
        // largest entry; lexicographic refinement must pick the smaller one.
        let c = matrix(&[
            &[5.0, 9.0, 9.0],
            &[1.0, 5.0, 4.0],
            &[2.0, 3.0, 5.0],
        ]);
        let a = assign_minmax_fair(&c).unwrap();
        let brute = brute_force_assign(&c, BruteObjective::LexMax).unwrap();
        assert_eq!(a.goal_of, brute.goal_of);
        assert_eq!(a.sorted_costs_desc(&c), brute.sorted_costs_desc(&c));
    }

    #[test]
    fn brute_force_examples() {
        let c = matrix(&[&[1.0, 4.0], &[3.0, 5.0]]);
        assert_eq!(
            brute_force_assign(&c, BruteObjective::Sum).unwrap().goal_of,
            vec![0, 1]
        );
        assert_eq!(
            brute_force_assign(&c, BruteObjective::LexMax)
                .unwrap()
                .goal_of,
            vec![1, 0]
        );
        let single = matrix(&[&[0.5]]);
        assert_eq!(
            brute_force_assign(&single, BruteObjective::Sum)
                .unwrap()
                .goal_of,
            vec![0]
        );
        assert_eq!(
            brute_force_assign(&single, BruteObjective::LexMax)
                .unwrap()
                .goal_of,
            vec![0]
        );
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let n = 10;
        let c = CostMatrix::new(vec![vec![1.0; n]; n]).unwrap();
        assert!(matches!(
            brute_force_assign(&c, BruteObjective::Sum),
            Err(Error::BruteForceSize { .. })
        ));
    }

    #[test]
    fn solvers_match_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for n in 2..=5 {
            for _ in 0..200 {
                let c = random_matrix(&mut rng, n);
                let opt = assign_optimal(&c);
                let opt_oracle = brute_force_assign(&c, BruteObjective::Sum).unwrap();
                assert_eq!(opt.total_cost(&c), opt_oracle.total_cost(&c));

                let fair = assign_minmax_fair(&c).unwrap();
                let fair_oracle = brute_force_assign(&c, BruteObjective::LexMax).unwrap();
                assert_eq!(fair.sorted_costs_desc(&c), fair_oracle.sorted_costs_desc(&c));
                assert_eq!(fair.goal_of, fair_oracle.goal_of);
                assert_eq!(opt.goal_of, opt_oracle.goal_of);
            }
        }
    }

    #[test]
    fn dominance_between_the_two_optima() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..300 {
            let c = random_matrix(&mut rng, 5);
            let opt = assign_optimal(&c);
            let fair = assign_minmax_fair(&c).unwrap();
            assert!(opt.total_cost(&c) <= fair.total_cost(&c));
            assert!(fair.max_cost(&c) <= opt.max_cost(&c));
        }
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(CostMatrix::new(vec![]).is_err());
        assert!(CostMatrix::new(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(CostMatrix::new(vec![vec![f64::NAN]]).is_err());
        assert!(CostMatrix::new(vec![vec![-1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn all_modes_return_permutations(
            n in 1usize..=6,
            raw in proptest::collection::vec(0.0f64..10.0, 36),
            seed in 0u64..1000,
        ) {
            let costs: Vec<Vec<f64>> =
                (0..n).map(|i| raw[i * n..(i + 1) * n].to_vec()).collect();
            let c = CostMatrix::new(costs).unwrap();
            prop_assert!(assign_random(n, seed).is_permutation());
            prop_assert!(assign_optimal(&c).is_permutation());
            prop_assert!(assign_minmax_fair(&c).unwrap().is_permutation());
        }

        #[test]
        fn scaling_costs_preserves_both_argmins(
            n in 2usize..=5,
            raw in proptest::collection::vec(0.01f64..1.0, 25),
            k in 0.1f64..50.0,
        ) {
            let costs: Vec<Vec<f64>> =
                (0..n).map(|i| raw[i * n..(i + 1) * n].to_vec()).collect();
            let scaled: Vec<Vec<f64>> = costs
                .iter()
                .map(|row| row.iter().map(|&x| x * k).collect())
                .collect();
            let c = CostMatrix::new(costs).unwrap();
            let ck = CostMatrix::new(scaled).unwrap();
            prop_assert_eq!(assign_optimal(&c).goal_of, assign_optimal(&ck).goal_of);
            prop_assert_eq!(
                assign_minmax_fair(&c).unwrap().goal_of,
                assign_minmax_fair(&ck).unwrap().goal_of
            );
        }
    }
}
