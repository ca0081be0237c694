//! Point-mass navigation across a `[0, 10]^2` arena with three disc
//! obstacles, driven by a potential-field policy (unit goal attraction plus
//! inverse-distance obstacle repulsion).
//!
//! Parameters: `(x, y, radius)` for each of three obstacles, then the goal
//! `(x, y)`. The agent starts at the origin.

use super::{check_params, progress, speed_penalty, task_score, goal_tail, Constraint, Environment, Episode, Preset, ScoringConfig, StepObservation};
use crate::error::Result;

pub const DT: f64 = 0.1;
pub const MAX_STEPS: usize = 300;
pub const V_MAX: f64 = 1.0;
pub const GOAL_RADIUS: f64 = 0.2;
/// Repulsion acts within this distance of an obstacle surface.
pub const INFLUENCE: f64 = 1.0;
pub const K_REP: f64 = 0.5;
/// Surface distances are floored here when computing repulsion.
pub const MIN_CLEARANCE: f64 = 0.05;

#[derive(Debug, Clone, Default)]
pub struct CorridorNav {
    scoring: ScoringConfig,
}

impl CorridorNav {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_scoring(mut self, scoring: ScoringConfig) -> Self {
        self.scoring = scoring;
        self
    }
}

impl Environment for CorridorNav {
    fn name(&self) -> &'static str {
        "corridor_nav"
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = Vec::with_capacity(11);
        for _ in 0..3 {
            b.extend([(0.0, 10.0), (0.0, 10.0), (0.2, 1.0)]);
        }
        b.extend([(0.0, 10.0), (0.0, 10.0)]);
        b
    }

    fn scoring(&self) -> &ScoringConfig {
        &self.scoring
    }

    fn preset(&self) -> Preset {
        Preset::CoopnaviLike
    }

    fn feature_stride(&self) -> usize {
        5
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("dt", DT),
            ("max_steps", MAX_STEPS as f64),
            ("v_max", V_MAX),
            ("goal_radius", GOAL_RADIUS),
            ("influence", INFLUENCE),
            ("k_rep", K_REP),
            ("min_clearance", MIN_CLEARANCE),
        ]
    }

    fn run(&self, params: &[f64]) -> Result<Episode> {
        check_params(self, params)?;
        let obstacles: Vec<(f64, f64, f64)> = params[..9].chunks(3).map(|c| (c[0], c[1], c[2])).collect();
        let goal = (params[9], params[10]);
        let (mut x, mut y) = (0.0f64, 0.0f64);
        let (mut vx, mut vy) = (0.0f64, 0.0f64);
        let dist_goal = |x: f64, y: f64| ((goal.0 - x).powi(2) + (goal.1 - y).powi(2)).sqrt();
        let inside = |x: f64, y: f64| {
            obstacles
                .iter()
                .any(|&(ox, oy, r)| ((x - ox).powi(2) + (y - oy).powi(2)).sqrt() < r)
        };
        let d0 = dist_goal(x, y);

        let first_violation = inside(x, y).then_some(Constraint::Collision);
        let mut steps = vec![StepObservation::new(vec![x, y, vx, vy], d0, 0.0, first_violation)];
        let mut reached = d0 < GOAL_RADIUS;
        let mut done = reached || first_violation.is_some();

        for _ in 0..MAX_STEPS {
            if done {
                break;
            }
            let dg = dist_goal(x, y);
            let mut fx = (goal.0 - x) / dg;
            let mut fy = (goal.1 - y) / dg;
            for &(ox, oy, r) in &obstacles {
                let (dx, dy) = (x - ox, y - oy);
                let dc = (dx * dx + dy * dy).sqrt();
                let rho = (dc - r).max(MIN_CLEARANCE);
                if rho < INFLUENCE && dc > 0.0 {
                    let mag = K_REP * (1.0 / rho - 1.0 / INFLUENCE) / (rho * rho);
                    fx += mag * dx / dc;
                    fy += mag * dy / dc;
                }
            }
            let norm = (fx * fx + fy * fy).sqrt();
            let scale = V_MAX / norm.max(1.0);
            vx = fx * scale;
            vy = fy * scale;
            x += vx * DT;
            y += vy * DT;

            let violation = inside(x, y).then_some(Constraint::Collision);
            let d = dist_goal(x, y);
            reached = d < GOAL_RADIUS;
            done = violation.is_some() || reached;
            let speed = (vx * vx + vy * vy).sqrt();
            steps.push(StepObservation::new(vec![x, y, vx, vy], d, speed - V_MAX, violation));
        }
        if !done {
            steps.last_mut().expect("non-empty").violation.get_or_insert(Constraint::Timeout);
        }
        let score = task_score(&steps, &self.scoring, |d| progress(d, d0), speed_penalty);
        let critical = steps.iter().any(|s| s.violation.is_some());
        let score = if reached && !critical {
            score + goal_tail(&self.scoring, steps.len(), MAX_STEPS)
        } else {
            score
        };
        Ok(Episode { steps, score, critical })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unobstructed_short_trip() {
        let env = CorridorNav::new();
        let p = [9.5, 9.5, 0.2, 9.0, 9.5, 0.2, 9.5, 9.0, 0.2, 1.0, 1.0];
        let ep = env.run(&p).unwrap();
        assert!(!ep.critical);
        assert!(ep.steps.len() < 20);
        assert!(ep.score > 0.0);
    }

    #[test]
    fn goal_inside_obstacle_is_critical() {
        let env = CorridorNav::new();
        let p = [5.0, 5.0, 1.0, 9.5, 0.5, 0.2, 0.5, 9.5, 0.2, 5.2, 4.9];
        let ep = env.run(&p).unwrap();
        assert!(ep.critical);
    }

    #[test]
    fn wrong_dimension_rejected() {
        assert!(CorridorNav::new().run(&[1.0; 10]).is_err());
    }
}
