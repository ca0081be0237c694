//! A point hopper crossing eight terrain segments of unit width.
//!
//! Parameters: the height of each segment, in `[-1, 1]`. Segment `i` covers
//! `x` in `[i, i + 1)`; the hopper starts at `x = 0.5` on segment 0 and must
//! reach `x = 8`.
//!
//! Gait: every hop launches with vertical speed `sqrt(2 g H_MAX)`. When the
//! next segment boundary is at most `REACH` ahead, the horizontal speed is
//! chosen so the boundary is crossed exactly at the apex, `H_MAX` above the
//! launch segment. Otherwise a short hop first repositions the hopper `REACH`
//! before the boundary. A boundary whose far side is higher than the body at
//! the crossing stops the hopper against the step: the body ends up below the
//! terrain and the episode fails. Flight is
//! integrated in closed form, so the critical set is exactly
//! `{ h[i + 1] - h[i] > H_MAX for some i }`.

use super::{check_params, goal_tail, progress, speed_penalty, task_score, Constraint, Environment, Episode, Preset, ScoringConfig, StepObservation};
use crate::error::Result;

pub const SEGMENTS: usize = 8;
pub const DT: f64 = 0.05;
pub const MAX_STEPS: usize = 400;
pub const GRAVITY: f64 = 9.81;
/// Apex height of every hop above its launch point.
pub const H_MAX: f64 = 1.5;
pub const START_X: f64 = 0.5;
/// Longest horizontal distance from launch to a boundary crossed at apex.
pub const REACH: f64 = 0.6;

/// Horizontal speed of a hop crossing a boundary `REACH` ahead.
pub fn nominal_speed() -> f64 {
    REACH / apex_time()
}

/// Horizontal launch speed from `x`.
fn launch_speed(x: f64) -> f64 {
    let dist = x.floor() + 1.0 - x;
    // tolerance keeps landings a rounding error short of `REACH` on the
    // crossing side
    if dist <= REACH + 1e-9 {
        dist / apex_time()
    } else {
        (dist - REACH) / (2.0 * apex_time())
    }
}

fn apex_time() -> f64 {
    (2.0 * H_MAX / GRAVITY).sqrt()
}

/// Closed-form critical test for a terrain profile.
pub fn is_critical(heights: &[f64]) -> bool {
    heights.windows(2).any(|w| w[1] - w[0] > H_MAX)
}

#[derive(Debug, Clone, Default)]
pub struct Walker1d {
    scoring: ScoringConfig,
}

impl Walker1d {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_scoring(mut self, scoring: ScoringConfig) -> Self {
        self.scoring = scoring;
        self
    }
}

impl Environment for Walker1d {
    fn name(&self) -> &'static str {
        "walker1d"
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); SEGMENTS]
    }

    /// Segment heights are terrain labels without a useful distance.
    fn metric_dims(&self) -> Vec<bool> {
        vec![false; SEGMENTS]
    }

    fn scoring(&self) -> &ScoringConfig {
        &self.scoring
    }

    fn preset(&self) -> Preset {
        Preset::BipedalLike
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("segments", SEGMENTS as f64),
            ("dt", DT),
            ("max_steps", MAX_STEPS as f64),
            ("gravity", GRAVITY),
            ("h_max", H_MAX),
            ("start_x", START_X),
            ("reach", REACH),
        ]
    }

    fn run(&self, params: &[f64]) -> Result<Episode> {
        check_params(self, params)?;
        let end = SEGMENTS as f64;
        let terrain = |x: f64| params[(x.floor() as usize).min(SEGMENTS - 1)];
        let vx_nom = nominal_speed();
        let vy0 = (2.0 * GRAVITY * H_MAX).sqrt();
        let d0 = end - START_X;

        let (mut x, mut y) = (START_X, params[0]);
        let mut vx = launch_speed(x);
        let mut vy = vy0;
        let mut steps = vec![StepObservation::new(vec![x, 0.0, vy], d0, vx - vx_nom, None)];
        let mut reached = false;
        let mut failed = false;

        for _ in 0..MAX_STEPS {
            let boundary = x.floor() + 1.0;
            let mut tau = DT;
            let tau_cross = (boundary - x) / vx;
            if tau_cross <= DT {
                let y_cross = y + vy * tau_cross - 0.5 * GRAVITY * tau_cross * tau_cross;
                if boundary >= end {
                    reached = true;
                    tau = tau_cross;
                } else if y_cross < params[boundary as usize] {
                    failed = true;
                    tau = tau_cross;
                }
            }
            let (x_end, y_end) = (x + vx * tau, y + vy * tau - 0.5 * GRAVITY * tau * tau);
            let ground = if reached { params[SEGMENTS - 1] } else { terrain(x_end) };
            let mut landed = false;
            if !reached && !failed && y_end <= ground && vy - GRAVITY * tau < 0.0 {
                // touchdown inside the step
                tau = (vy + (vy * vy + 2.0 * GRAVITY * (y - ground)).sqrt()) / GRAVITY;
                landed = true;
            }
            x = if reached { end } else { x + vx * tau };
            y = if landed { ground } else { y + vy * tau - 0.5 * GRAVITY * tau * tau };
            vy -= GRAVITY * tau;
            let dv = vx - vx_nom;
            if landed {
                vx = launch_speed(x);
                vy = vy0;
            }
            let below = if failed { y - params[boundary as usize] } else { y - ground };
            let violation = failed.then_some(Constraint::Fall);
            steps.push(StepObservation::new(vec![x, below, vy], end - x, dv, violation));
            if reached || failed {
                break;
            }
        }
        if !reached && !failed {
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
    fn flat_terrain_is_crossed() {
        let ep = Walker1d::new().run(&[0.0; SEGMENTS]).unwrap();
        assert!(!ep.critical);
        assert_eq!(ep.steps.last().unwrap().distance, 0.0);
        assert!(ep.steps.len() < MAX_STEPS);
    }

    #[test]
    fn step_above_clearance_fails() {
        let mut h = [0.0; SEGMENTS];
        h[3] = -0.8;
        h[4] = 0.8;
        let ep = Walker1d::new().run(&h).unwrap();
        assert!(ep.critical);
        assert_eq!(ep.violations(), vec![Constraint::Fall]);
        assert!(ep.steps.last().unwrap().state[1] < 0.0);
    }

    #[test]
    fn step_below_clearance_is_cleared() {
        let mut h = [0.0; SEGMENTS];
        h[3] = -0.7;
        h[4] = 0.7;
        assert!(!Walker1d::new().run(&h).unwrap().critical);
    }

    #[test]
    fn descents_never_fail() {
        let h = [1.0, -1.0, 0.4, -1.0, 0.4, -1.0, 0.45, -1.0];
        let ep = Walker1d::new().run(&h).unwrap();
        assert!(!ep.critical, "{:?}", ep.violations());
    }

    #[test]
    fn closed_form_matches_simulation_on_a_sweep() {
        let env = Walker1d::new();
        for k in 0..200 {
            let h: Vec<f64> = (0..SEGMENTS)
                .map(|i| (((k * 7919 + i * 104_729) % 2001) as f64 / 1000.0) - 1.0)
                .collect();
            assert_eq!(env.run(&h).unwrap().critical, is_critical(&h), "{h:?}");
        }
    }
}
