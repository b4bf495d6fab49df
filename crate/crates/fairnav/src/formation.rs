//! Formation shapes: expected-position generation for circle, line, arrow,
//! and infinity (lemniscate), plus the per-shape success evaluation.

use crate::error::{Error, Result};
use crate::vec2::Vec2;
use crate::world::WorldState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormationShape {
    Circle,
    Line,
    Arrow,
    Infinity,
}

impl FormationShape {
    pub fn parse(s: &str) -> Result<FormationShape> {
        match s {
            "circle" => Ok(FormationShape::Circle),
            "line" => Ok(FormationShape::Line),
            "arrow" => Ok(FormationShape::Arrow),
            "infinity" => Ok(FormationShape::Infinity),
            other => Err(Error::Config(format!(
                "unknown formation shape {other:?} (expected circle, line, arrow, or infinity)"
            ))),
        }
    }

    fn landmark_count(self) -> usize {
        match self {
            FormationShape::Line => 2,
            _ => 1,
        }
    }
}

/// A formation task: shape, landmark(s), scale (circle radius, line length,
/// arrow tail length, or lemniscate half-width), the number of expected
/// positions, and the success distance threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationSpec {
    pub shape: FormationShape,
    pub landmarks: Vec<Vec2>,
    pub scale: f64,
    pub n_positions: usize,
    pub threshold: f64,
}

impl FormationSpec {
    pub fn validate(&self) -> Result<()> {
        let want = self.shape.landmark_count();
        if self.landmarks.len() != want {
            return Err(Error::Config(format!(
                "{:?} formation needs exactly {want} landmark(s), got {}",
                self.shape,
                self.landmarks.len()
            )));
        }
        if !(self.scale > 0.0) {
            return Err(Error::Config("formation scale must be > 0".into()));
        }
        if self.n_positions < 1 {
            return Err(Error::Config("formation needs at least 1 position".into()));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::Config("formation threshold must be >= 0".into()));
        }
        Ok(())
    }
}

/// The discretization of a shape into as many points as agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedPositions {
    pub points: Vec<Vec2>,
}

/// Point on the lemniscate x = a sin t / (1 + cos^2 t),
/// y = a sin t cos t / (1 + cos^2 t).
pub fn lemniscate_point(a: f64, t: f64) -> Vec2 {
    let denom = 1.0 + t.cos() * t.cos();
    Vec2::new(a * t.sin() / denom, a * t.sin() * t.cos() / denom)
}

/// Generates the expected positions for a formation spec.
pub fn expected_positions(spec: &FormationSpec) -> Result<ExpectedPositions> {
    spec.validate()?;
    let n = spec.n_positions;
    let points: Vec<Vec2> = match spec.shape {
        FormationShape::Circle => {
            let center = spec.landmarks[0];
            (0..n)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    center + Vec2::new(spec.scale * theta.cos(), spec.scale * theta.sin())
                })
                .collect()
        }
        FormationShape::Line => {
            let (a, b) = (spec.landmarks[0], spec.landmarks[1]);
            if n == 1 {
                vec![a + (b - a) * 0.5]
            } else {
                (0..n)
                    .map(|k| a + (b - a) * (k as f64 / (n - 1) as f64))
                    .collect()
            }
        }
        FormationShape::Arrow => {
            // Tip at the landmark; the other n-1 points alternate between
            // two straight tails at +/-135 degrees from the +x heading.
            let tip = spec.landmarks[0];
            let per_tail = (n - 1).div_ceil(2);
            let step = if per_tail == 0 {
                0.0
            } else {
                spec.scale / per_tail as f64
            };
            let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
            let upper = Vec2::new(-sqrt_half, sqrt_half);
            let lower = Vec2::new(-sqrt_half, -sqrt_half);
            std::iter::once(tip)
                .chain((1..n).map(|k| {
                    let dir = if k % 2 == 1 { upper } else { lower };
                    let rank = k.div_ceil(2) as f64;
                    tip + dir * (step * rank)
                }))
                .collect()
        }
        FormationShape::Infinity => {
            let center = spec.landmarks[0];
            (0..n)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    center + lemniscate_point(spec.scale, t)
                })
                .collect()
        }
    };

    for (i, p) in points.iter().enumerate() {
        for q in &points[..i] {
            if p == q {
                return Err(Error::Config(
                    "formation produced coincident expected positions".into(),
                ));
            }
        }
    }
    Ok(ExpectedPositions { points })
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Whether a position lies on the shape locus, up to `slack`:
/// circle - radial deviation from the radius; line - within the segment
/// band; arrow - near one of the two tail segments; infinity - inside one
/// of the two lobe discs of radius a/2 centered at (+/- a/2, 0) from the
/// landmark (grown by `slack`).
pub fn shape_contains(spec: &FormationSpec, p: Vec2, slack: f64) -> bool {
    match spec.shape {
        FormationShape::Circle => {
            let center = spec.landmarks[0];
            (p.distance(center) - spec.scale).abs() <= slack
        }
        FormationShape::Line => {
            let (a, b) = (spec.landmarks[0], spec.landmarks[1]);
            point_segment_distance(p, a, b) <= slack
        }
        FormationShape::Arrow => {
            let tip = spec.landmarks[0];
            let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
            let upper = tip + Vec2::new(-sqrt_half, sqrt_half) * spec.scale;
            let lower = tip + Vec2::new(-sqrt_half, -sqrt_half) * spec.scale;
            point_segment_distance(p, tip, upper).min(point_segment_distance(p, tip, lower))
                <= slack
        }
        FormationShape::Infinity => {
            let center = spec.landmarks[0];
            let r_lobe = spec.scale / 2.0;
            let left = center + Vec2::new(-r_lobe, 0.0);
            let right = center + Vec2::new(r_lobe, 0.0);
            p.distance(left).min(p.distance(right)) <= r_lobe + slack
        }
    }
}

/// Per-agent formation success flags and the aggregate percentage.
///
/// An agent succeeds when its position satisfies the shape predicate at
/// the spec threshold and it claims a unique expected position: candidate
/// (agent, point) pairs within the threshold are claimed greedily in order
/// of distance, with ties broken by agent index.
pub fn formation_success(state: &WorldState, spec: &FormationSpec) -> (Vec<bool>, f64) {
    let expected = match expected_positions(spec) {
        Ok(e) => e,
        Err(_) => return (vec![false; state.agents.len()], 0.0),
    };
    let n = state.agents.len();
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, agent) in state.agents.iter().enumerate() {
        for (k, point) in expected.points.iter().enumerate() {
            let d = agent.position.distance(*point);
            if d <= spec.threshold {
                candidates.push((d, i, k));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut agent_claimed = vec![false; n];
    let mut point_claimed = vec![false; expected.points.len()];
    for (_, i, k) in candidates {
        if !agent_claimed[i] && !point_claimed[k] {
            agent_claimed[i] = true;
            point_claimed[k] = true;
        }
    }
    let flags: Vec<bool> = state
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| agent_claimed[i] && shape_contains(spec, a.position, spec.threshold))
        .collect();
    let pct = 100.0 * flags.iter().filter(|&&f| f).count() as f64 / n.max(1) as f64;
    (flags, pct)
}
