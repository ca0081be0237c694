//! Scenario generation: sensitivity-guided local perturbation, hybrid
//! global exploration over unexplored cells, and the sliding-window monitor
//! that switches between the two.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Scenario, ScenarioSpec, SubspaceGrid, SubspaceIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    LocalPerturbation,
    GlobalExploration,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LocalPerturbation => "local",
            Mode::GlobalExploration => "global",
        }
    }
}

/// Which generator produced a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Local,
    /// Zero-density neighbour of a top-criticality cell.
    Directional,
    /// Any zero-density (or, once none remain, least-tested) cell.
    Random,
    /// Uniform over the whole box (baseline and database initialisation).
    Uniform,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Local => "local",
            Branch::Directional => "directional",
            Branch::Random => "random",
            Branch::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub window: usize,
    pub theta: f64,
    pub hysteresis: usize,
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta {} must lie in [0, 1]", self.theta)));
        }
        if self.hysteresis == 0 {
            return Err(Error::Config("hysteresis must be at least 1".into()));
        }
        Ok(())
    }
}

/// Critical-rate monitor over the most recent `window` tests.
#[derive(Debug, Clone)]
pub struct WindowMonitor {
    cfg: MonitorConfig,
    buffer: VecDeque<bool>,
    criticals: usize,
    mode: Mode,
    streak: usize,
}

impl WindowMonitor {
    pub fn new(cfg: MonitorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            buffer: VecDeque::with_capacity(cfg.window),
            cfg,
            criticals: 0,
            mode: Mode::LocalPerturbation,
            streak: 0,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn push(&mut self, critical: bool) {
        if self.buffer.len() == self.cfg.window && self.buffer.pop_front() == Some(true) {
            self.criticals -= 1;
        }
        self.buffer.push_back(critical);
        if critical {
            self.criticals += 1;
        }
    }

    /// Fraction of criticals among the buffered tests; 1.0 when empty.
    pub fn efficiency(&self) -> f64 {
        if self.buffer.is_empty() {
            1.0
        } else {
            self.criticals as f64 / self.buffer.len() as f64
        }
    }

    /// Efficiency used for mode decisions: 1.0 until the window is full.
    pub fn reading(&self) -> f64 {
        if self.buffer.len() < self.cfg.window {
            1.0
        } else {
            self.efficiency()
        }
    }

    /// Feeds one efficiency reading through the hysteresis rule.
    pub fn observe(&mut self, reading: f64) -> Mode {
        let wanted = if reading >= self.cfg.theta {
            Mode::LocalPerturbation
        } else {
            Mode::GlobalExploration
        };
        if wanted == self.mode {
            self.streak = 0;
        } else {
            self.streak += 1;
            if self.streak >= self.cfg.hysteresis {
                self.mode = wanted;
                self.streak = 0;
            }
        }
        self.mode
    }

    /// Evaluates the current window and returns the mode for the next test.
    pub fn choose_mode(&mut self) -> Mode {
        let r = self.reading();
        self.observe(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Probability of the directional branch in global exploration.
    pub alpha: f64,
    pub top_k: usize,
    /// Half-width of the local perturbation, as a fraction of each range.
    pub perturb_scale: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            top_k: 5,
            perturb_scale: 0.05,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} must lie in [0, 1]", self.alpha)));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if !(self.perturb_scale > 0.0 && self.perturb_scale <= 1.0) {
            return Err(Error::Config(format!(
                "perturb_scale {} must lie in (0, 1]",
                self.perturb_scale
            )));
        }
        Ok(())
    }
}

/// Independent uniform offset per coordinate, clipped to the box.
pub fn perturb_local<R: Rng>(spec: &ScenarioSpec, base: &Scenario, cfg: &GeneratorConfig, rng: &mut R) -> Scenario {
    for _ in 0..1000 {
        let params: Vec<f64> = base
            .params()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let (a, b) = spec.bounds()[i];
                let w = cfg.perturb_scale * (b - a);
                (v + rng.random_range(-w..=w)).clamp(a, b)
            })
            .collect();
        if params.as_slice() != base.params() {
            return Scenario::from_raw(params);
        }
    }
    // a base pinned in a corner with every draw pushing outward, 1000 times over
    base.clone()
}

/// Uniform point inside a cell, half-open on the upper side.
pub fn sample_within<R: Rng>(spec: &ScenarioSpec, cell: &SubspaceIndex, rng: &mut R) -> Scenario {
    let params = spec
        .cell_box(cell)
        .into_iter()
        .map(|(lo, hi)| loop {
            let v = lo + rng.random::<f64>() * (hi - lo);
            if v < hi {
                break v;
            }
        })
        .collect();
    Scenario::from_raw(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub scenario: Scenario,
    pub cell: SubspaceIndex,
    pub branch: Branch,
}

fn pick<'a, T, R: Rng>(items: &'a [T], rng: &mut R) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Uniform choice among zero-density cells, falling back to the
/// least-tested cells when the grid is fully covered.
fn random_unexplored<R: Rng>(grid: &SubspaceGrid, rng: &mut R) -> SubspaceIndex {
    let spec = grid.spec();
    let total = spec.total_cells();
    let covered = grid.covered_cells();
    if covered < total && covered.saturating_mul(2) <= total {
        loop {
            let label = rng.random_range(1..=total);
            if grid.density(label) == 0 {
                return spec.index_of(label).expect("label in range");
            }
        }
    }
    let cells = grid.min_density_subspaces();
    pick(&cells, rng).clone()
}

/// Hybrid global exploration. With probability `alpha` the target is a
/// zero-density neighbour of a randomly chosen top-criticality cell;
/// otherwise (or when that set is empty) any zero-density cell.
pub fn explore_global<R: Rng>(grid: &SubspaceGrid, cfg: &GeneratorConfig, rng: &mut R) -> Exploration {
    let spec = grid.spec();
    let r: f64 = rng.random();
    if r < cfg.alpha {
        let top = grid.top_k_critical(cfg.top_k);
        if !top.is_empty() {
            let centre = pick(&top, rng);
            let candidates: Vec<SubspaceIndex> = spec
                .neighbors(centre)
                .into_iter()
                .filter(|c| grid.density(c.label) == 0)
                .collect();
            if !candidates.is_empty() {
                let cell = pick(&candidates, rng).clone();
                return Exploration {
                    scenario: sample_within(spec, &cell, rng),
                    cell,
                    branch: Branch::Directional,
                };
            }
        }
    }
    let cell = random_unexplored(grid, rng);
    Exploration {
        scenario: sample_within(spec, &cell, rng),
        cell,
        branch: Branch::Random,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn monitor(window: usize, theta: f64, h: usize) -> WindowMonitor {
        WindowMonitor::new(MonitorConfig {
            window,
            theta,
            hysteresis: h,
        })
        .unwrap()
    }

    #[test]
    fn efficiency_examples() {
        let mut m = monitor(100, 0.13, 1);
        assert_eq!(m.efficiency(), 1.0);
        for i in 0..100 {
            m.push(i < 13);
        }
        assert!((m.efficiency() - 0.13).abs() < 1e-15);

        let mut m = monitor(1000, 0.001, 1);
        for i in 0..1000 {
            m.push(i == 500);
        }
        assert!((m.efficiency() - 0.001).abs() < 1e-15);

        let mut m = monitor(10, 0.5, 1);
        for _ in 0..25 {
            m.push(true);
        }
        assert_eq!(m.efficiency(), 1.0);
    }

    #[test]
    fn window_slides() {
        let mut m = monitor(4, 0.5, 1);
        for c in [true, true, false, false] {
            m.push(c);
        }
        assert_eq!(m.efficiency(), 0.5);
        m.push(false);
        m.push(false);
        assert_eq!(m.efficiency(), 0.0);
    }

    #[test]
    fn reading_is_one_until_window_fills() {
        let mut m = monitor(3, 0.5, 1);
        m.push(false);
        m.push(false);
        assert_eq!(m.efficiency(), 0.0);
        assert_eq!(m.reading(), 1.0);
        assert_eq!(m.choose_mode(), Mode::LocalPerturbation);
        m.push(false);
        assert_eq!(m.choose_mode(), Mode::GlobalExploration);
    }

    #[test]
    fn plain_threshold_rule() {
        let mut m = monitor(10, 0.1, 1);
        assert_eq!(m.observe(0.2), Mode::LocalPerturbation);
        assert_eq!(m.observe(0.05), Mode::GlobalExploration);
        assert_eq!(m.observe(0.1), Mode::LocalPerturbation);
    }

    #[test]
    fn hysteresis_replay() {
        let mut m = monitor(10, 0.1, 3);
        let modes: Vec<Mode> = [0.05, 0.05, 0.2, 0.05, 0.05, 0.05].iter().map(|&f| m.observe(f)).collect();
        let mut expected = vec![Mode::LocalPerturbation; 5];
        expected.push(Mode::GlobalExploration);
        assert_eq!(modes, expected);
    }

    #[test]
    fn config_invariants() {
        assert!(GeneratorConfig {
            perturb_scale: 0.0,
            ..GeneratorConfig::default()
        }
        .validate()
        .is_err());
        assert!(GeneratorConfig {
            alpha: 1.5,
            ..GeneratorConfig::default()
        }
        .validate()
        .is_err());
        assert!(MonitorConfig {
            window: 0,
            theta: 0.1,
            hysteresis: 1
        }
        .validate()
        .is_err());
    }

    #[test]
    fn perturbation_stays_in_bounds_at_corner() {
        let spec = ScenarioSpec::uniform(vec![(0.0, 1.0); 3], 4).unwrap();
        let base = Scenario::checked(&spec, vec![0.0, 1.0, 0.0]).unwrap();
        let cfg = GeneratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = perturb_local(&spec, &base, &cfg, &mut rng);
            assert!(spec.contains(s.params()));
            assert_ne!(s, base);
            assert!(s.distance(&base) <= 0.05 * 3f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn sample_within_cell_box() {
        let spec = ScenarioSpec::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![5, 4]).unwrap();
        let cell = spec.subspace(vec![2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let s = sample_within(&spec, &cell, &mut rng);
            let p = s.params();
            assert!((0.4..0.6).contains(&p[0]) && (0.25..0.5).contains(&p[1]), "{p:?}");
            assert_eq!(spec.abstract_scenario(&s).unwrap(), cell);
        }
        let one = ScenarioSpec::uniform(vec![(-2.0, 3.0)], 1).unwrap();
        let c = one.subspace(vec![0]).unwrap();
        let s = sample_within(&one, &c, &mut rng);
        assert!(one.contains(s.params()));
    }

    #[test]
    fn random_branch_targets_unexplored_cells() {
        let spec = ScenarioSpec::uniform(vec![(0.0, 1.0); 2], 4).unwrap();
        let mut grid = SubspaceGrid::new(spec.clone());
        let cfg = GeneratorConfig {
            alpha: 0.0,
            ..GeneratorConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..16 {
            let e = explore_global(&grid, &cfg, &mut rng);
            assert_eq!(e.branch, Branch::Random);
            assert_eq!(grid.density(e.cell.label), 0);
            assert_eq!(spec.abstract_scenario(&e.scenario).unwrap(), e.cell);
            grid.record_test(&e.cell, false);
        }
        assert_eq!(grid.covered_cells(), 16);
        // fully covered: falls back to least-tested cells
        let e = explore_global(&grid, &cfg, &mut rng);
        assert_eq!(grid.density(e.cell.label), 1);
    }

    #[test]
    fn directional_branch_with_alpha_one() {
        let spec = ScenarioSpec::uniform(vec![(0.0, 1.0); 2], 6).unwrap();
        let mut grid = SubspaceGrid::new(spec.clone());
        let hot = spec.subspace(vec![3, 3]).unwrap();
        grid.record_test(&hot, true);
        let cfg = GeneratorConfig {
            alpha: 1.0,
            top_k: 1,
            ..GeneratorConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let neigh = spec.neighbors(&hot);
        for _ in 0..500 {
            let e = explore_global(&grid, &cfg, &mut rng);
            assert_eq!(e.branch, Branch::Directional);
            assert!(neigh.contains(&e.cell));
        }
        // directional set exhausted: falls back to the random branch
        for c in &neigh {
            grid.record_test(c, false);
        }
        let e = explore_global(&grid, &cfg, &mut rng);
        assert_eq!(e.branch, Branch::Random);
        assert_eq!(grid.density(e.cell.label), 0);
    }
}
