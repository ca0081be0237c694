//! Planar encounter between an ego aircraft flying to a goal and a
//! non-cooperative intruder on a straight line.
//!
//! Parameters: intruder start `x0, y0` in `[-10, 10]^2`, intruder heading in
//! `[0, 2 pi]`, intruder speed and ego speed in `[0.1, 1]`. Speeds are in
//! units of `SPEED_SCALE` lengths per time unit.
//!
//! The ego starts at the origin heading `+x` toward `(10, 0)`. Each step it
//! predicts the closest point of approach assuming both keep their current
//! velocity; if the predicted miss distance is below `R_ACT` within
//! `LOOKAHEAD`, it turns away at the maximum rate and slows down, otherwise
//! it turns back toward the goal.

use std::f64::consts::PI;

use super::{capped_separation, check_params, speed_penalty, task_score, goal_tail, Constraint, Environment, Episode, Preset, ScoringConfig, StepObservation};
use crate::error::Result;

pub const DT: f64 = 0.1;
pub const MAX_STEPS: usize = 200;
pub const R_COL: f64 = 0.55;
pub const SPEED_SCALE: f64 = 10.0;
pub const GOAL: (f64, f64) = (10.0, 0.0);
pub const GOAL_RADIUS: f64 = 0.5;
pub const D_CAP: f64 = 5.0;
pub const R_ACT: f64 = 1.5;
pub const LOOKAHEAD: f64 = 1.0;
pub const TURN_RATE: f64 = 0.5;
pub const AVOID_SPEED: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct Intercept2d {
    scoring: ScoringConfig,
    r_act: f64,
}

impl Default for Intercept2d {
    fn default() -> Self {
        Self::new()
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    a
}

/// Minimum distance over one step of linear relative motion.
fn segment_min_distance(r0: (f64, f64), w: (f64, f64), dt: f64) -> f64 {
    let ww = w.0 * w.0 + w.1 * w.1;
    let tau = if ww > 0.0 {
        (-(r0.0 * w.0 + r0.1 * w.1) / ww).clamp(0.0, dt)
    } else {
        0.0
    };
    ((r0.0 + w.0 * tau).powi(2) + (r0.1 + w.1 * tau).powi(2)).sqrt()
}

impl Intercept2d {
    pub fn new() -> Self {
        Self {
            scoring: ScoringConfig::default(),
            r_act: R_ACT,
        }
    }

    pub fn with_scoring(mut self, scoring: ScoringConfig) -> Self {
        self.scoring = scoring;
        self
    }

    /// Same encounter with the avoidance law switched off.
    pub fn without_avoidance() -> Self {
        Self {
            r_act: 0.0,
            ..Self::new()
        }
    }

    pub fn avoidance_enabled(&self) -> bool {
        self.r_act > 0.0
    }
}

impl Environment for Intercept2d {
    fn name(&self) -> &'static str {
        "intercept2d"
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-10.0, 10.0), (-10.0, 10.0), (0.0, 2.0 * PI), (0.1, 1.0), (0.1, 1.0)]
    }

    fn scoring(&self) -> &ScoringConfig {
        &self.scoring
    }

    fn preset(&self) -> Preset {
        Preset::AcasxuLike
    }

    fn feature_stride(&self) -> usize {
        4
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("dt", DT),
            ("max_steps", MAX_STEPS as f64),
            ("r_col", R_COL),
            ("speed_scale", SPEED_SCALE),
            ("goal_x", GOAL.0),
            ("goal_y", GOAL.1),
            ("goal_radius", GOAL_RADIUS),
            ("d_cap", D_CAP),
            ("r_act", self.r_act),
            ("lookahead", LOOKAHEAD),
            ("turn_rate", TURN_RATE),
            ("avoid_speed", AVOID_SPEED),
        ]
    }

    fn run(&self, params: &[f64]) -> Result<Episode> {
        check_params(self, params)?;
        let (ix0, iy0, psi, vi, ve) = (params[0], params[1], params[2], params[3], params[4]);
        let iv = (vi * SPEED_SCALE * psi.cos(), vi * SPEED_SCALE * psi.sin());
        let (mut ex, mut ey, mut heading) = (0.0f64, 0.0f64, 0.0f64);
        let (mut ix, mut iy) = (ix0, iy0);

        let state = |ex: f64, ey: f64, ix: f64, iy: f64| vec![ex, ey, ix - ex, iy - ey];
        let sep0 = ((ix - ex).powi(2) + (iy - ey).powi(2)).sqrt();
        let mut steps = vec![StepObservation::new(
            state(ex, ey, ix, iy),
            sep0,
            0.0,
            (sep0 < R_COL).then_some(Constraint::Collision),
        )];
        let mut done = sep0 < R_COL;
        let mut reached = false;

        for _ in 0..MAX_STEPS {
            if done {
                break;
            }
            let r = (ix - ex, iy - ey);
            let ev_cur = (ve * SPEED_SCALE * heading.cos(), ve * SPEED_SCALE * heading.sin());
            let w = (iv.0 - ev_cur.0, iv.1 - ev_cur.1);
            let ww = w.0 * w.0 + w.1 * w.1;
            let t_cpa = if ww > 0.0 { -(r.0 * w.0 + r.1 * w.1) / ww } else { 0.0 };
            let miss = if t_cpa > 0.0 {
                ((r.0 + w.0 * t_cpa).powi(2) + (r.1 + w.1 * t_cpa).powi(2)).sqrt()
            } else {
                (r.0 * r.0 + r.1 * r.1).sqrt()
            };
            let threat = t_cpa > 0.0 && t_cpa <= LOOKAHEAD && miss < self.r_act;

            let max_turn = TURN_RATE * DT;
            let speed_factor;
            if threat {
                // intruder on the left (positive cross product) -> turn right
                let cross = heading.cos() * r.1 - heading.sin() * r.0;
                let dir = if cross >= 0.0 { -1.0 } else { 1.0 };
                heading = wrap(heading + dir * max_turn);
                speed_factor = AVOID_SPEED;
            } else {
                let bearing = (GOAL.1 - ey).atan2(GOAL.0 - ex);
                let err = wrap(bearing - heading);
                heading = wrap(heading + err.clamp(-max_turn, max_turn));
                speed_factor = 1.0;
            }
            let speed = ve * speed_factor;
            let ev = (speed * SPEED_SCALE * heading.cos(), speed * SPEED_SCALE * heading.sin());
            let min_sep = segment_min_distance(r, (iv.0 - ev.0, iv.1 - ev.1), DT);

            ex += ev.0 * DT;
            ey += ev.1 * DT;
            ix += iv.0 * DT;
            iy += iv.1 * DT;

            let violation = (min_sep < R_COL).then_some(Constraint::Collision);
            reached = ((GOAL.0 - ex).powi(2) + (GOAL.1 - ey).powi(2)).sqrt() < GOAL_RADIUS;
            done = violation.is_some() || reached;
            steps.push(StepObservation::new(state(ex, ey, ix, iy), min_sep, speed - ve, violation));
        }
        if !done && !reached {
            steps.last_mut().expect("non-empty").violation.get_or_insert(Constraint::Timeout);
        }
        let score = task_score(&steps, &self.scoring, |d| capped_separation(d, D_CAP), speed_penalty);
        let critical = steps.iter().any(|s| s.violation.is_some());
        let score = if reached && !critical {
            score + goal_tail(&self.scoring, steps.len(), MAX_STEPS)
        } else {
            score
        };
        Ok(Episode { steps, score, critical })
    }
}
