//! Hypercube tessellation of the scenario parameter space and per-cell
//! test statistics.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameter box with a uniform per-dimension partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    bounds: Vec<(f64, f64)>,
    partitions: Vec<usize>,
    strides: Vec<u64>,
    total_cells: u64,
}

impl ScenarioSpec {
    pub fn new(bounds: Vec<(f64, f64)>, partitions: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() {
            return invalid("scenario spec needs at least one dimension");
        }
        if bounds.len() != partitions.len() {
            return invalid(format!(
                "{} bounds but {} partition counts",
                bounds.len(),
                partitions.len()
            ));
        }
        for (i, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return invalid(format!("dimension {i}: bounds [{a}, {b}] are not a proper interval"));
            }
        }
        let mut strides = Vec::with_capacity(partitions.len());
        let mut total: u64 = 1;
        for (i, &m) in partitions.iter().enumerate() {
            if m == 0 {
                return invalid(format!("dimension {i}: partition count must be positive"));
            }
            strides.push(total);
            total = total
                .checked_mul(m as u64)
                .ok_or_else(|| Error::InvalidInput("total cell count overflows u64".into()))?;
        }
        Ok(Self {
            bounds,
            partitions,
            strides,
            total_cells: total,
        })
    }

    /// Same bounds, `m` cells on every axis.
    pub fn uniform(bounds: Vec<(f64, f64)>, m: usize) -> Result<Self> {
        let n = bounds.len();
        Self::new(bounds, vec![m; n])
    }

    /// Largest uniform `m` such that `m^dims <= max_cells`.
    pub fn default_partition(dims: usize, max_cells: u64) -> usize {
        let mut m = 1usize;
        loop {
            let next = (m + 1) as u64;
            match next.checked_pow(dims as u32) {
                Some(c) if c <= max_cells => m += 1,
                _ => return m,
            }
        }
    }

    pub fn with_partitions(&self, partitions: Vec<usize>) -> Result<Self> {
        Self::new(self.bounds.clone(), partitions)
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn partitions(&self) -> &[usize] {
        &self.partitions
    }

    pub fn total_cells(&self) -> u64 {
        self.total_cells
    }

    pub fn cell_width(&self, dim: usize) -> f64 {
        let (a, b) = self.bounds[dim];
        (b - a) / self.partitions[dim] as f64
    }

    pub fn range(&self, dim: usize) -> f64 {
        let (a, b) = self.bounds[dim];
        b - a
    }

    /// Partition points `a + (j/m)(b - a)` for `j = 0..=m`.
    pub fn partition_points(&self, dim: usize) -> Vec<f64> {
        let m = self.partitions[dim];
        (0..=m).map(|j| self.partition_point(dim, j)).collect()
    }

    pub fn partition_point(&self, dim: usize, j: usize) -> f64 {
        let (a, b) = self.bounds[dim];
        let m = self.partitions[dim];
        if j == m {
            b
        } else {
            a + (j as f64 / m as f64) * (b - a)
        }
    }

    /// Maps a scenario to its cell. The upper bound of each axis belongs to
    /// the last cell.
    pub fn abstract_scenario(&self, s: &Scenario) -> Result<SubspaceIndex> {
        self.abstract_point(s.params())
    }

    pub fn abstract_point(&self, x: &[f64]) -> Result<SubspaceIndex> {
        if x.len() != self.dims() {
            return invalid(format!("scenario has {} coordinates, spec has {}", x.len(), self.dims()));
        }
        let mut k = Vec::with_capacity(x.len());
        for (i, &v) in x.iter().enumerate() {
            let (a, b) = self.bounds[i];
            if !(v >= a && v <= b) {
                return invalid(format!("coordinate {i} = {v} outside [{a}, {b}]"));
            }
            let m = self.partitions[i];
            let mut ki = ((v - a) / self.cell_width(i)).floor() as usize;
            if ki >= m {
                ki = m - 1;
            }
            // floating-point division can land one cell off near a partition point
            while ki > 0 && v < self.partition_point(i, ki) {
                ki -= 1;
            }
            while ki + 1 < m && v >= self.partition_point(i, ki + 1) {
                ki += 1;
            }
            k.push(ki);
        }
        let label = self.label_unchecked(&k);
        Ok(SubspaceIndex::from_parts(k, label))
    }

    fn label_unchecked(&self, k: &[usize]) -> u64 {
        1 + k
            .iter()
            .zip(&self.strides)
            .map(|(&ki, &s)| ki as u64 * s)
            .sum::<u64>()
    }

    pub fn label_of(&self, multi_index: &[usize]) -> Result<u64> {
        if multi_index.len() != self.dims() {
            return invalid(format!(
                "multi-index has {} entries, spec has {}",
                multi_index.len(),
                self.dims()
            ));
        }
        for (i, (&k, &m)) in multi_index.iter().zip(&self.partitions).enumerate() {
            if k >= m {
                return invalid(format!("index {k} out of range for dimension {i} with {m} cells"));
            }
        }
        Ok(self.label_unchecked(multi_index))
    }

    pub fn index_of(&self, label: u64) -> Result<SubspaceIndex> {
        if label == 0 || label > self.total_cells {
            return invalid(format!("label {label} outside [1, {}]", self.total_cells));
        }
        let mut rest = label - 1;
        let mut k = Vec::with_capacity(self.dims());
        for &m in &self.partitions {
            k.push((rest % m as u64) as usize);
            rest /= m as u64;
        }
        Ok(SubspaceIndex::from_parts(k, label))
    }

    pub fn subspace(&self, multi_index: Vec<usize>) -> Result<SubspaceIndex> {
        let label = self.label_of(&multi_index)?;
        Ok(SubspaceIndex::from_parts(multi_index, label))
    }

    /// Moore neighbourhood clipped to the grid.
    pub fn neighbors(&self, index: &SubspaceIndex) -> Vec<SubspaceIndex> {
        let n = self.dims();
        let ranges: Vec<(usize, usize)> = index
            .multi_index
            .iter()
            .zip(&self.partitions)
            .map(|(&k, &m)| (k.saturating_sub(1), (k + 1).min(m - 1)))
            .collect();
        let mut out = Vec::new();
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            if cur != index.multi_index {
                let label = self.label_unchecked(&cur);
                out.push(SubspaceIndex::from_parts(cur.clone(), label));
            }
            let mut d = 0;
            loop {
                if d == n {
                    return out;
                }
                if cur[d] < ranges[d].1 {
                    cur[d] += 1;
                    break;
                }
                cur[d] = ranges[d].0;
                d += 1;
            }
        }
    }

    /// Lower and upper corner of a cell.
    pub fn cell_box(&self, index: &SubspaceIndex) -> Vec<(f64, f64)> {
        index
            .multi_index
            .iter()
            .enumerate()
            .map(|(i, &k)| (self.partition_point(i, k), self.partition_point(i, k + 1)))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && x.iter().zip(&self.bounds).all(|(&v, &(a, b))| v >= a && v <= b)
    }
}

/// A concrete point inside a [`ScenarioSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scenario(Vec<f64>);

impl Scenario {
    /// Builds a scenario, clipping every coordinate into the spec's box.
    pub fn clipped(spec: &ScenarioSpec, mut params: Vec<f64>) -> Result<Self> {
        if params.len() != spec.dims() {
            return invalid(format!("scenario has {} coordinates, spec has {}", params.len(), spec.dims()));
        }
        for (v, &(a, b)) in params.iter_mut().zip(spec.bounds()) {
            if v.is_nan() {
                return invalid("scenario coordinate is NaN");
            }
            *v = v.clamp(a, b);
        }
        Ok(Self(params))
    }

    /// Builds a scenario, rejecting out-of-bounds coordinates.
    pub fn checked(spec: &ScenarioSpec, params: Vec<f64>) -> Result<Self> {
        if !spec.contains(&params) {
            return invalid(format!("scenario {params:?} is outside the spec box"));
        }
        Ok(Self(params))
    }

    pub(crate) fn from_raw(params: Vec<f64>) -> Self {
        Self(params)
    }

    pub fn params(&self) -> &[f64] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Scenario) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubspaceIndex {
    pub multi_index: Vec<usize>,
    pub label: u64,
}

impl SubspaceIndex {
    fn from_parts(multi_index: Vec<usize>, label: u64) -> Self {
        Self { multi_index, label }
    }
}

/// Test density, critical count and criticality of one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubspaceStats {
    pub density: u64,
    pub critical_count: u64,
}

impl SubspaceStats {
    /// `F / D`, or 0 for an unexplored cell.
    pub fn criticality(&self) -> f64 {
        if self.density == 0 {
            0.0
        } else {
            self.critical_count as f64 / self.density as f64
        }
    }

    pub fn record(&mut self, critical: bool) {
        self.density += 1;
        if critical {
            self.critical_count += 1;
        }
    }
}

/// Sparse per-cell statistics over a [`ScenarioSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceGrid {
    spec: ScenarioSpec,
    stats: BTreeMap<u64, SubspaceStats>,
    tests: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CellRecord {
    label: u64,
    multi_index: Vec<usize>,
    density: u64,
    critical_count: u64,
    criticality: f64,
}

impl SubspaceGrid {
    pub fn new(spec: ScenarioSpec) -> Self {
        Self {
            spec,
            stats: BTreeMap::new(),
            tests: 0,
        }
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn record_test(&mut self, index: &SubspaceIndex, critical: bool) -> SubspaceStats {
        self.tests += 1;
        let entry = self.stats.entry(index.label).or_default();
        entry.record(critical);
        *entry
    }

    pub fn stats(&self, label: u64) -> SubspaceStats {
        self.stats.get(&label).copied().unwrap_or_default()
    }

    pub fn density(&self, label: u64) -> u64 {
        self.stats(label).density
    }

    pub fn total_tests(&self) -> u64 {
        self.tests
    }

    pub fn total_critical(&self) -> u64 {
        self.stats.values().map(|s| s.critical_count).sum()
    }

    /// Number of cells with `D > 0`.
    pub fn covered_cells(&self) -> u64 {
        self.stats.len() as u64
    }

    pub fn touched(&self) -> impl Iterator<Item = (u64, SubspaceStats)> + '_ {
        self.stats.iter().map(|(&l, &s)| (l, s))
    }

    /// Every cell with zero density, in label order.
    pub fn zero_density_subspaces(&self) -> Vec<SubspaceIndex> {
        (1..=self.spec.total_cells())
            .filter(|l| !self.stats.contains_key(l))
            .map(|l| self.spec.index_of(l).expect("label in range"))
            .collect()
    }

    /// Cells ranked by criticality, then critical count, then label.
    /// Unexplored cells are never ranked.
    pub fn top_k_critical(&self, k: usize) -> Vec<SubspaceIndex> {
        let mut cells: Vec<(u64, SubspaceStats)> = self.touched().collect();
        cells.sort_by(|(la, a), (lb, b)| {
            // compare F_a/D_a with F_b/D_b exactly
            let lhs = a.critical_count as u128 * b.density as u128;
            let rhs = b.critical_count as u128 * a.density as u128;
            rhs.cmp(&lhs)
                .then(b.critical_count.cmp(&a.critical_count))
                .then(la.cmp(lb))
        });
        cells
            .into_iter()
            .take(k)
            .map(|(l, _)| self.spec.index_of(l).expect("label in range"))
            .collect()
    }

    /// Cells with the smallest density over the whole grid, in label order.
    /// Returns zero-density cells when any exist.
    pub fn min_density_subspaces(&self) -> Vec<SubspaceIndex> {
        if self.covered_cells() < self.spec.total_cells() {
            return self.zero_density_subspaces();
        }
        let min = self.stats.values().map(|s| s.density).min().unwrap_or(0);
        self.stats
            .iter()
            .filter(|(_, s)| s.density == min)
            .map(|(&l, _)| self.spec.index_of(l).expect("label in range"))
            .collect()
    }

    /// One JSON line per touched cell.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        for (&label, s) in &self.stats {
            let rec = CellRecord {
                label,
                multi_index: self.spec.index_of(label)?.multi_index,
                density: s.density,
                critical_count: s.critical_count,
                criticality: s.criticality(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn import<R: BufRead>(spec: ScenarioSpec, input: R) -> Result<Self> {
        let mut grid = Self::new(spec);
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CellRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: n + 1,
                reason: e.to_string(),
            })?;
            let idx = grid.spec.index_of(rec.label)?;
            if idx.multi_index != rec.multi_index || rec.critical_count > rec.density {
                return Err(Error::Parse {
                    line: n + 1,
                    reason: format!("inconsistent cell record for label {}", rec.label),
                });
            }
            grid.tests += rec.density;
            grid.stats.insert(
                rec.label,
                SubspaceStats {
                    density: rec.density,
                    critical_count: rec.critical_count,
                },
            );
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_5x4() -> ScenarioSpec {
        ScenarioSpec::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![5, 4]).unwrap()
    }

    #[test]
    fn partition_points_match_linear_interpolation() {
        let s = ScenarioSpec::new(vec![(0.0, 1.0)], vec![4]).unwrap();
        assert_eq!(s.partition_points(0), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let s = ScenarioSpec::new(vec![(-1.0, 1.0)], vec![2]).unwrap();
        assert_eq!(s.partition_points(0), vec![-1.0, 0.0, 1.0]);
        let s = ScenarioSpec::new(vec![(0.0, 1.0)], vec![5]).unwrap();
        assert!((s.partition_points(0)[2] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn abstraction_examples() {
        let s = unit_5x4();
        let k = |x: &[f64]| s.abstract_point(x).unwrap().multi_index;
        assert_eq!(k(&[0.0, 0.0]), vec![0, 0]);
        assert_eq!(k(&[1.0, 1.0]), vec![4, 3]);
        assert_eq!(k(&[0.41, 0.30]), vec![2, 1]);
        assert!(s.abstract_point(&[1.01, 0.5]).is_err());
        assert!(s.abstract_point(&[0.5]).is_err());
    }

    #[test]
    fn labels_are_row_major_dimension_one_fastest() {
        let s = unit_5x4();
        assert_eq!(s.label_of(&[0, 0]).unwrap(), 1);
        assert_eq!(s.label_of(&[2, 1]).unwrap(), 8);
        assert_eq!(s.index_of(20).unwrap().multi_index, vec![4, 3]);
        assert!(s.index_of(0).is_err());
        assert!(s.index_of(21).is_err());
        assert!(s.label_of(&[5, 0]).is_err());
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(ScenarioSpec::new(vec![], vec![]).is_err());
        assert!(ScenarioSpec::new(vec![(1.0, 1.0)], vec![2]).is_err());
        assert!(ScenarioSpec::new(vec![(0.0, 1.0)], vec![0]).is_err());
        assert!(ScenarioSpec::uniform(vec![(0.0, 1.0); 40], 1 << 8).is_err());
    }

    #[test]
    fn default_partition_bounds_cell_count() {
        assert_eq!(ScenarioSpec::default_partition(5, 1_000_000), 15);
        assert_eq!(ScenarioSpec::default_partition(11, 1_000_000), 3);
        assert_eq!(ScenarioSpec::default_partition(8, 1_000_000), 5);
        assert_eq!(ScenarioSpec::default_partition(2, 1_000_000), 1000);
    }

    #[test]
    fn record_test_examples() {
        let mut g = SubspaceGrid::new(unit_5x4());
        let c = g.spec().index_of(6).unwrap();
        g.record_test(&c, true);
        g.record_test(&c, false);
        let st = g.record_test(&c, false);
        assert_eq!((st.density, st.critical_count), (3, 1));
        assert!((st.criticality() - 1.0 / 3.0).abs() < 1e-15);

        let c = g.spec().index_of(15).unwrap();
        for _ in 0..5 {
            g.record_test(&c, false);
        }
        assert_eq!(g.stats(15).density, 5);
        assert_eq!(g.stats(15).criticality(), 0.0);
        assert_eq!(g.stats(1), SubspaceStats::default());
        assert_eq!(g.stats(1).criticality(), 0.0);
    }

    #[test]
    fn neighbor_counts() {
        let s = unit_5x4();
        let interior = s.subspace(vec![2, 1]).unwrap();
        assert_eq!(s.neighbors(&interior).len(), 8);
        let corner = s.subspace(vec![0, 0]).unwrap();
        assert_eq!(s.neighbors(&corner).len(), 3);
        let cube = ScenarioSpec::uniform(vec![(0.0, 1.0); 3], 3).unwrap();
        let centre = cube.subspace(vec![1, 1, 1]).unwrap();
        let n = cube.neighbors(&centre);
        assert_eq!(n.len(), 26);
        assert!(!n.contains(&centre));
    }

    #[test]
    fn zero_density_and_top_k() {
        let mut g = SubspaceGrid::new(unit_5x4());
        assert_eq!(g.zero_density_subspaces().len(), 20);
        assert!(g.top_k_critical(3).is_empty());
        let c = g.spec().index_of(7).unwrap();
        g.record_test(&c, false);
        let zero = g.zero_density_subspaces();
        assert_eq!(zero.len(), 19);
        assert!(!zero.iter().any(|z| z.label == 7));
        for l in 1..=20 {
            let c = g.spec().index_of(l).unwrap();
            g.record_test(&c, false);
        }
        assert!(g.zero_density_subspaces().is_empty());
        let top: Vec<u64> = g.top_k_critical(4).iter().map(|c| c.label).collect();
        assert_eq!(top, vec![1, 2, 3, 4]);
        // 7 has density 2, every other cell 1
        let min: Vec<u64> = g.min_density_subspaces().iter().map(|c| c.label).collect();
        assert_eq!(min.len(), 19);
        assert!(!min.contains(&7));
    }

    #[test]
    fn top_k_breaks_ties_on_critical_count() {
        let mut g = SubspaceGrid::new(unit_5x4());
        let a = g.spec().index_of(3).unwrap();
        let b = g.spec().index_of(9).unwrap();
        g.record_test(&a, true);
        g.record_test(&a, false);
        g.record_test(&b, true);
        g.record_test(&b, true);
        g.record_test(&b, false);
        g.record_test(&b, false);
        let top: Vec<u64> = g.top_k_critical(5).iter().map(|c| c.label).collect();
        assert_eq!(top, vec![9, 3]);
    }

    #[test]
    fn export_import_round_trip() {
        let mut g = SubspaceGrid::new(unit_5x4());
        for (l, c) in [(3, true), (3, false), (11, false), (20, true)] {
            let idx = g.spec().index_of(l).unwrap();
            g.record_test(&idx, c);
        }
        let mut buf = Vec::new();
        g.export(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("{\"label\":3,\"multi_index\":[2,0],\"density\":2,\"critical_count\":1,\"criticality\":0.5}"));
        let back = SubspaceGrid::import(unit_5x4(), buf.as_slice()).unwrap();
        assert_eq!(back.stats(3), g.stats(3));
        assert_eq!(back.total_tests(), 4);
    }

    proptest! {
        #[test]
        fn stats_stay_consistent(flags in proptest::collection::vec((1u64..=20, any::<bool>()), 0..200)) {
            let mut g = SubspaceGrid::new(unit_5x4());
            for (l, c) in &flags {
                let idx = g.spec().index_of(*l).unwrap();
                g.record_test(&idx, *c);
            }
            let total: u64 = g.touched().map(|(_, s)| s.density).sum();
            prop_assert_eq!(total, flags.len() as u64);
            for (_, s) in g.touched() {
                prop_assert!(s.critical_count <= s.density);
                let k = s.criticality();
                prop_assert!((0.0..=1.0).contains(&k));
            }
        }

        #[test]
        fn abstraction_is_total(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let s = unit_5x4();
            let idx = s.abstract_point(&[x, y]).unwrap();
            let bx = s.cell_box(&idx);
            for (v, (lo, hi)) in [x, y].iter().zip(bx) {
                prop_assert!(*v >= lo);
                prop_assert!(*v < hi || (*v == hi && hi == 1.0));
            }
        }
    }
}
