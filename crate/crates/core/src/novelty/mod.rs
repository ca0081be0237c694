//! Behaviour-space novelty.
//!
//! A trajectory `T_0..T_M` is scored with a pair of Gaussian mixtures: one
//! over single states and one over consecutive state pairs `[T_t, T_{t+1}]`.
//! The trajectory probability telescopes as
//!
//! ```text
//! Pr = GMM_s(T_0) * prod_t GMM_c([T_t, T_{t+1}]) / GMM_s(T_t)
//! ```
//!
//! and is always handled as a log value. Low values mark novel behaviour.

mod gmm;

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use gmm::{Component, Gmm, SuffStats};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Ordered state-feature vectors of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(states: Vec<Vec<f64>>) -> Result<Self> {
        if states.is_empty() {
            return invalid("trajectory needs at least one state");
        }
        let d = states[0].len();
        if d == 0 || states.iter().any(|s| s.len() != d) {
            return invalid("trajectory states must share a positive dimension");
        }
        Ok(Self { states })
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Every `stride`-th state, always keeping the last one.
    pub fn subsampled(&self, stride: usize) -> Vec<&[f64]> {
        let stride = stride.max(1);
        let last = self.states.len() - 1;
        let mut out: Vec<&[f64]> = self.states.iter().step_by(stride).map(Vec::as_slice).collect();
        if !last.is_multiple_of(stride) {
            out.push(&self.states[last]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub components: usize,
    /// Learning-rate schedule `rho_t = (t + t0)^(-kappa)`.
    pub t0: f64,
    pub kappa: f64,
    /// Ridge added to covariances, relative to the seeding data's variance.
    pub ridge_rel: f64,
    /// Floor on state densities used as denominators.
    pub density_floor: f64,
    /// Keep every `stride`-th state of a trajectory.
    pub stride: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            components: 4,
            t0: 10.0,
            kappa: 0.6,
            ridge_rel: 1e-6,
            density_floor: 1e-300,
            stride: 1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::Config("novelty model needs at least one component".into()));
        }
        if !(self.kappa > 0.5 && self.kappa <= 1.0) || !(self.t0 >= 1.0) {
            return Err(Error::Config("online EM schedule needs t0 >= 1 and kappa in (0.5, 1]".into()));
        }
        if !(self.ridge_rel > 0.0) || !(self.density_floor > 0.0) || self.stride == 0 {
            return Err(Error::Config("ridge, density floor and stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GmmNoveltyModel {
    cfg: ModelConfig,
    state: Option<Gmm>,
    transition: Option<Gmm>,
    observed: u64,
}

fn pairs(states: &[&[f64]]) -> Vec<Vec<f64>> {
    states
        .windows(2)
        .map(|w| w[0].iter().chain(w[1].iter()).copied().collect())
        .collect()
}

impl GmmNoveltyModel {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: None,
            transition: None,
            observed: 0,
        })
    }

    /// Builds a model from fixed mixtures, e.g. for tests and fixtures.
    pub fn from_mixtures(cfg: ModelConfig, state: Gmm, transition: Gmm) -> Result<Self> {
        cfg.validate()?;
        if transition.dim() != 2 * state.dim() {
            return invalid("transition mixture must have twice the state dimension");
        }
        Ok(Self {
            cfg,
            state: Some(state),
            transition: Some(transition),
            observed: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn observed_count(&self) -> u64 {
        self.observed
    }

    pub fn state_model(&self) -> Option<&Gmm> {
        self.state.as_ref()
    }

    pub fn transition_model(&self) -> Option<&Gmm> {
        self.transition.as_ref()
    }

    pub fn is_fitted(&self) -> bool {
        self.state.is_some()
    }

    pub fn learning_rate(&self) -> f64 {
        (self.observed as f64 + self.cfg.t0).powf(-self.cfg.kappa)
    }

    /// Log of the telescoped trajectory probability.
    pub fn trajectory_log_prob(&self, traj: &Trajectory) -> Result<f64> {
        let state = match &self.state {
            Some(s) => s,
            None => return invalid("novelty model has not absorbed any trajectory"),
        };
        if traj.dim() != state.dim() {
            return invalid(format!("trajectory dimension {} != model dimension {}", traj.dim(), state.dim()));
        }
        let xs = traj.subsampled(self.cfg.stride);
        let log_floor = self.cfg.density_floor.ln();
        let mut lp = state.log_density(xs[0])?;
        if xs.len() > 1 {
            let trans = match &self.transition {
                Some(t) => t,
                None => return invalid("transition mixture has not been fitted"),
            };
            for (w, pair) in xs.windows(2).zip(pairs(&xs)) {
                lp += trans.log_density(&pair)? - state.log_density(w[0])?.max(log_floor);
            }
        }
        Ok(lp)
    }

    /// Absorbs one trajectory with one stepwise-EM update of each mixture.
    pub fn fit_online(&mut self, traj: &Trajectory) -> Result<()> {
        if let Some(s) = &self.state {
            if s.dim() != traj.dim() {
                return invalid("trajectory dimension does not match the model");
            }
        }
        let rho = self.learning_rate();
        let xs = traj.subsampled(self.cfg.stride);
        let owned: Vec<Vec<f64>> = xs.iter().map(|x| x.to_vec()).collect();
        if self.state.is_none() {
            let mut r = rng::stream(self.cfg.seed, rng::Stream::NoveltyInit);
            self.state = Some(Gmm::seeded(&owned, self.cfg.components, self.cfg.ridge_rel, &mut r)?);
        }
        self.state.as_mut().expect("seeded").online_step(&owned, rho)?;

        let ps = pairs(&xs);
        if !ps.is_empty() {
            if self.transition.is_none() {
                let mut r = rng::stream(self.cfg.seed.wrapping_add(1), rng::Stream::NoveltyInit);
                self.transition = Some(Gmm::seeded(&ps, self.cfg.components, self.cfg.ridge_rel, &mut r)?);
            }
            self.transition.as_mut().expect("seeded").online_step(&ps, rho)?;
        }
        self.observed += 1;
        Ok(())
    }

    /// Plain-text checkpoint: header line, then every component's weight,
    /// mean, covariance and running statistics.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let c = &self.cfg;
        writeln!(out, "gmm-novelty 1")?;
        writeln!(
            out,
            "dim {} components {} t0 {:.16e} kappa {:.16e} ridge_rel {:.16e} floor {:.16e} stride {} seed {} observed {}",
            self.state.as_ref().map_or(0, |s| s.dim()),
            c.components,
            c.t0,
            c.kappa,
            c.ridge_rel,
            c.density_floor,
            c.stride,
            c.seed,
            self.observed
        )?;
        for (name, m) in [("state", &self.state), ("transition", &self.transition)] {
            match m {
                None => writeln!(out, "mixture {name} none")?,
                Some(g) => {
                    writeln!(out, "mixture {name} {} {} {:.16e}", g.dim(), g.components().len(), g.ridge())?;
                    for (comp, st) in g.components().iter().zip(g.stats()) {
                        writeln!(out, "weight {:.16e}", comp.weight)?;
                        writeln!(out, "mean {}", join(comp.mean.iter()))?;
                        writeln!(out, "cov {}", join(comp.cov.transpose().iter()))?;
                        writeln!(out, "s0 {:.16e}", st.s0)?;
                        writeln!(out, "s1 {}", join(st.s1.iter()))?;
                        writeln!(out, "s2 {}", join(st.s2.transpose().iter()))?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
        let mut p = LineParser { lines: &lines, pos: 0 };
        let magic = p.next()?;
        if magic.trim() != "gmm-novelty 1" {
            return p.fail("unrecognised checkpoint header");
        }
        let head = p.next()?.to_owned();
        let f: Vec<&str> = head.split_whitespace().collect();
        if f.len() != 18 {
            return p.fail("malformed model header");
        }
        let num = |i: usize| -> Result<f64> { p.float(f[i]) };
        let int = |i: usize| -> Result<u64> { p.int(f[i]) };
        let cfg = ModelConfig {
            components: int(3)? as usize,
            t0: num(5)?,
            kappa: num(7)?,
            ridge_rel: num(9)?,
            density_floor: num(11)?,
            stride: int(13)? as usize,
            seed: int(15)?,
        };
        let observed = int(17)?;
        let state = p.mixture("state")?;
        let transition = p.mixture("transition")?;
        let mut model = Self::new(cfg)?;
        model.state = state;
        model.transition = transition;
        model.observed = observed;
        Ok(model)
    }
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

struct LineParser<'a> {
    lines: &'a [String],
    pos: usize,
}

impl LineParser<'_> {
    fn fail<T>(&self, reason: &str) -> Result<T> {
        Err(Error::Parse {
            line: self.pos,
            reason: reason.into(),
        })
    }

    fn next(&mut self) -> Result<&str> {
        let line = self.lines.get(self.pos).ok_or_else(|| Error::Parse {
            line: self.pos + 1,
            reason: "unexpected end of checkpoint".into(),
        })?;
        self.pos += 1;
        Ok(line)
    }

    fn float(&self, s: &str) -> Result<f64> {
        s.parse().map_err(|_| Error::Parse {
            line: self.pos,
            reason: format!("bad number `{s}`"),
        })
    }

    fn int(&self, s: &str) -> Result<u64> {
        s.parse().map_err(|_| Error::Parse {
            line: self.pos,
            reason: format!("bad integer `{s}`"),
        })
    }

    fn tagged(&mut self, tag: &str, len: usize) -> Result<Vec<f64>> {
        let line = self.next()?.to_owned();
        let mut it = line.split_whitespace();
        if it.next() != Some(tag) {
            return self.fail(&format!("expected `{tag}`"));
        }
        let vals = it.map(|s| self.float(s)).collect::<Result<Vec<_>>>()?;
        if vals.len() != len {
            return self.fail(&format!("`{tag}` needs {len} values"));
        }
        Ok(vals)
    }

    fn mixture(&mut self, name: &str) -> Result<Option<Gmm>> {
        let line = self.next()?.to_owned();
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 3 || f[0] != "mixture" || f[1] != name {
            return self.fail(&format!("expected mixture `{name}`"));
        }
        if f[2] == "none" {
            return Ok(None);
        }
        if f.len() != 5 {
            return self.fail("malformed mixture line");
        }
        let d = self.int(f[2])? as usize;
        let k = self.int(f[3])? as usize;
        let ridge = self.float(f[4])?;
        let mut comps = Vec::with_capacity(k);
        let mut stats = Vec::with_capacity(k);
        for _ in 0..k {
            let w = self.tagged("weight", 1)?[0];
            let mean = DVector::from_vec(self.tagged("mean", d)?);
            let cov = DMatrix::from_row_slice(d, d, &self.tagged("cov", d * d)?);
            let s0 = self.tagged("s0", 1)?[0];
            let s1 = DVector::from_vec(self.tagged("s1", d)?);
            let s2 = DMatrix::from_row_slice(d, d, &self.tagged("s2", d * d)?);
            comps.push(Component::new(w, mean, cov)?);
            stats.push(SuffStats { s0, s1, s2 });
        }
        Gmm::restore(comps, stats, ridge).map(Some)
    }
}

/// How the novelty threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum ThresholdMode {
    /// Fixed log-probability threshold.
    Fixed(f64),
    /// Empirical quantile of recent log-probabilities.
    Quantile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyConfig {
    pub mode: ThresholdMode,
    pub window: usize,
    /// Used in quantile mode while the history is empty.
    pub fallback: f64,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        Self {
            mode: ThresholdMode::Quantile(0.25),
            window: 500,
            fallback: f64::NEG_INFINITY,
        }
    }
}

impl NoveltyConfig {
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            ThresholdMode::Quantile(q) if !(q > 0.0 && q < 1.0) => {
                Err(Error::Config(format!("quantile {q} must lie in (0, 1)")))
            }
            ThresholdMode::Fixed(t) if !t.is_finite() => Err(Error::Config("fixed threshold must be finite".into())),
            _ if self.window == 0 => Err(Error::Config("threshold window must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// Threshold on log trajectory probability below which behaviour is novel.
pub fn novelty_threshold(cfg: &NoveltyConfig, history: &[f64]) -> f64 {
    match cfg.mode {
        ThresholdMode::Fixed(t) => t,
        ThresholdMode::Quantile(_) if history.is_empty() => cfg.fallback,
        ThresholdMode::Quantile(q) => {
            let mut v = history.to_vec();
            v.sort_by(f64::total_cmp);
            let pos = q * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        }
    }
}

/// Sliding window of recent log-probabilities feeding [`novelty_threshold`].
#[derive(Debug, Clone)]
pub struct ThresholdTracker {
    cfg: NoveltyConfig,
    history: VecDeque<f64>,
}

impl ThresholdTracker {
    pub fn new(cfg: NoveltyConfig) -> Self {
        Self {
            history: VecDeque::with_capacity(cfg.window),
            cfg,
        }
    }

    pub fn threshold(&self) -> f64 {
        let h: Vec<f64> = self.history.iter().copied().collect();
        novelty_threshold(&self.cfg, &h)
    }

    pub fn push(&mut self, log_prob: f64) {
        if self.history.len() == self.cfg.window {
            self.history.pop_front();
        }
        self.history.push_back(log_prob);
    }
}
