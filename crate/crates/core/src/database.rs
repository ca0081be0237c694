//! Scenario database: the seed pool of base scenarios and the archive of
//! critical scenarios.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, Episode};
use crate::error::{invalid, Error, Result};
use crate::space::{Scenario, ScenarioSpec};

/// Floor applied to every sensitivity before weighted base selection, so
/// records with no observed sensitivity stay reachable.
pub const SELECTION_EPSILON: f64 = 1e-6;

fn selection_weight(r: &ScenarioRecord) -> f64 {
    r.sensitivity.max(SELECTION_EPSILON)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "parent")]
pub enum Origin {
    Initial,
    Perturbed(u64),
    Explored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub id: u64,
    pub scenario: Scenario,
    pub task_score: f64,
    pub critical: bool,
    pub sensitivity: f64,
    /// Log trajectory probability under the novelty model, when it was scored.
    pub log_prob: Option<f64>,
    pub origin: Origin,
}

/// Outcome of [`ScenarioDatabase::maybe_admit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admission {
    Archived,
    /// Admitted because it scored lower than its base.
    LowerScore,
    /// Admitted because its trajectory was novel.
    Novel,
    Duplicate,
    Discarded,
}

impl Admission {
    pub fn admitted(self) -> bool {
        matches!(self, Admission::LowerScore | Admission::Novel)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Admission::Archived => "archived",
            Admission::LowerScore => "lower_score",
            Admission::Novel => "novel",
            Admission::Duplicate => "duplicate",
            Admission::Discarded => "discarded",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointHeader {
    capacity: Option<usize>,
    next_id: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "set")]
enum CheckpointLine {
    Base(ScenarioRecord),
    Critical(ScenarioRecord),
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioDatabase {
    base: Vec<ScenarioRecord>,
    critical: Vec<ScenarioRecord>,
    capacity: Option<usize>,
    next_id: u64,
    keys: HashSet<Vec<u64>>,
}

fn key(s: &Scenario) -> Vec<u64> {
    s.params().iter().map(|v| v.to_bits()).collect()
}

/// Score change per unit parameter distance between a base and its perturbation.
pub fn sensitivity(score_base: f64, score_new: f64, base: &Scenario, new: &Scenario) -> Result<f64> {
    let dist = base.distance(new);
    if dist == 0.0 || !dist.is_finite() {
        return invalid("sensitivity needs two distinct scenarios");
    }
    Ok((score_base - score_new).abs() / dist)
}

impl ScenarioDatabase {
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            capacity,
            ..Self::default()
        }
    }

    /// Samples `n` scenarios uniformly over the spec box and evaluates each once.
    /// Returns the database together with the episodes in sampling order.
    pub fn init<R: Rng>(
        env: &dyn Environment,
        spec: &ScenarioSpec,
        n: usize,
        capacity: Option<usize>,
        rng: &mut R,
    ) -> Result<(Self, Vec<Episode>)> {
        if n == 0 {
            return invalid("database needs at least one initial scenario");
        }
        let mut db = Self::new(capacity);
        let mut episodes = Vec::with_capacity(n);
        for _ in 0..n {
            let s = uniform_scenario(spec, rng);
            let ep = env.run(s.params())?;
            let rec = db.new_record(s, &ep, None, Origin::Initial);
            if rec.critical {
                db.archive(rec);
            } else {
                db.push_base(rec);
            }
            episodes.push(ep);
        }
        Ok((db, episodes))
    }

    /// Builds a record with a fresh id. Does not insert it.
    pub fn new_record(&mut self, scenario: Scenario, ep: &Episode, log_prob: Option<f64>, origin: Origin) -> ScenarioRecord {
        let id = self.next_id;
        self.next_id += 1;
        ScenarioRecord {
            id,
            scenario,
            task_score: ep.score,
            critical: ep.critical,
            sensitivity: 0.0,
            log_prob,
            origin,
        }
    }

    pub fn base(&self) -> &[ScenarioRecord] {
        &self.base
    }

    pub fn critical(&self) -> &[ScenarioRecord] {
        &self.critical
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&ScenarioRecord> {
        self.base.iter().find(|r| r.id == id)
    }

    fn archive(&mut self, rec: ScenarioRecord) {
        self.critical.push(rec);
    }

    fn push_base(&mut self, rec: ScenarioRecord) -> bool {
        if !self.keys.insert(key(&rec.scenario)) {
            return false;
        }
        self.base.push(rec);
        if let Some(cap) = self.capacity {
            while self.base.len() > cap {
                self.evict_least_novel();
            }
        }
        true
    }

    fn evict_least_novel(&mut self) {
        // unscored records rank as most novel; ties evict the oldest
        let victim = self
            .base
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.log_prob.map(|lp| (i, lp, r.id)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)))
            .map(|(i, _, _)| i)
            .unwrap_or(0);
        let rec = self.base.remove(victim);
        self.keys.remove(&key(&rec.scenario));
    }

    /// Raises a record's sensitivity to `sigma` if that is larger than what it holds.
    pub fn update_sensitivity(&mut self, id: u64, sigma: f64) {
        if let Some(r) = self.base.iter_mut().find(|r| r.id == id) {
            if sigma > r.sensitivity {
                r.sensitivity = sigma;
            }
        }
    }

    /// Draws a base record with probability proportional to `max(sigma, eps)`.
    pub fn select_base_local<R: Rng>(&self, rng: &mut R) -> Result<&ScenarioRecord> {
        if self.base.is_empty() {
            return invalid("cannot select a base scenario from an empty database");
        }
        let total: f64 = self.base.iter().map(selection_weight).sum();
        let mut u = rng.random::<f64>() * total;
        for r in &self.base {
            let w = selection_weight(r);
            if u < w {
                return Ok(r);
            }
            u -= w;
        }
        Ok(self.base.last().expect("non-empty"))
    }

    /// Admission rule for an evaluated scenario. Critical scenarios only go
    /// to the archive; others join the base pool when they score below their
    /// base or their trajectory is novel (`log_prob < threshold`).
    pub fn maybe_admit(
        &mut self,
        new: ScenarioRecord,
        base_score: Option<f64>,
        threshold: f64,
    ) -> Admission {
        if new.critical {
            self.archive(new);
            return Admission::Archived;
        }
        let lower = base_score.is_some_and(|b| new.task_score < b);
        // an unscored trajectory (empty model) counts as novel
        let novel = new.log_prob.is_none_or(|lp| lp < threshold);
        let decision = if lower {
            Admission::LowerScore
        } else if novel {
            Admission::Novel
        } else {
            return Admission::Discarded;
        };
        if self.push_base(new) {
            decision
        } else {
            Admission::Duplicate
        }
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let header = CheckpointHeader {
            capacity: self.capacity,
            next_id: self.next_id,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for r in &self.base {
            serde_json::to_writer(&mut out, &CheckpointLine::Base(r.clone()))?;
            out.write_all(b"\n")?;
        }
        for r in &self.critical {
            serde_json::to_writer(&mut out, &CheckpointLine::Critical(r.clone()))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header: CheckpointHeader = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?).map_err(|e| Error::Parse {
                line: 1,
                reason: e.to_string(),
            })?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    reason: "empty checkpoint".into(),
                })
            }
        };
        let mut db = Self::new(header.capacity);
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CheckpointLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: n + 1,
                reason: e.to_string(),
            })?;
            match parsed {
                CheckpointLine::Base(r) => {
                    if !db.keys.insert(key(&r.scenario)) {
                        return Err(Error::Parse {
                            line: n + 1,
                            reason: "duplicate base scenario".into(),
                        });
                    }
                    db.base.push(r);
                }
                CheckpointLine::Critical(r) => db.critical.push(r),
            }
        }
        db.next_id = header.next_id;
        Ok(db)
    }
}

pub fn uniform_scenario<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Scenario {
    let params = spec
        .bounds()
        .iter()
        .map(|&(a, b)| a + rng.random::<f64>() * (b - a))
        .collect();
    Scenario::from_raw(params)
}
