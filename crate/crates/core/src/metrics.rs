//! Diversity metrics over a set of scenarios and the weighted hybrid score
//! used to rank campaign configurations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::novelty::{GmmNoveltyModel, Trajectory};
use crate::space::{Scenario, ScenarioSpec};

/// Hybrid score weights for critical count, coverage, distance and inverse
/// trajectory similarity.
pub const HYBRID_WEIGHTS: [f64; 4] = [0.5, 0.2, 0.1, 0.2];

/// Number of distinct grid cells occupied by `scenarios`.
pub fn coverage<'a, I>(scenarios: I, spec: &ScenarioSpec) -> Result<u64>
where
    I: IntoIterator<Item = &'a Scenario>,
{
    let mut labels = BTreeSet::new();
    for s in scenarios {
        labels.insert(spec.abstract_scenario(s)?.label);
    }
    Ok(labels.len() as u64)
}

/// Prefactor applied to the sum of pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceNorm {
    /// `2 / Q`.
    #[default]
    Literal,
    /// `2 / (Q (Q - 1))`, the mean over unordered pairs.
    PairMean,
}

/// Sum of Euclidean distances over unordered pairs, scaled by `norm`.
/// Dimensions with `mask[i] == false` are ignored. Returns 0 when fewer than
/// two points are given.
pub fn mean_pairwise_distance(points: &[&[f64]], mask: Option<&[bool]>, norm: DistanceNorm) -> f64 {
    let q = points.len();
    if q < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..q {
        for j in i + 1..q {
            let d2: f64 = points[i]
                .iter()
                .zip(points[j])
                .enumerate()
                .filter(|(k, _)| mask.is_none_or(|m| m[*k]))
                .map(|(_, (a, b))| (a - b) * (a - b))
                .sum();
            sum += d2.sqrt();
        }
    }
    let q = q as f64;
    match norm {
        DistanceNorm::Literal => 2.0 / q * sum,
        DistanceNorm::PairMean => 2.0 / (q * (q - 1.0)) * sum,
    }
}

/// Mean of `exp(l)` over `log_probs`, computed in log space. Returns
/// `-inf` for an empty slice.
pub fn log_mean_exp(log_probs: &[f64]) -> f64 {
    if log_probs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = log_probs.iter().map(|l| (l - m).exp()).sum();
    m + s.ln() - (log_probs.len() as f64).ln()
}

/// Mean trajectory probability under `model`; 0 for an empty set.
pub fn trajectory_similarity(model: &GmmNoveltyModel, trajectories: &[Trajectory]) -> Result<f64> {
    Ok(log_trajectory_similarity(model, trajectories)?.exp())
}

/// Natural log of [`trajectory_similarity`], finite even when the linear
/// value underflows.
pub fn log_trajectory_similarity(model: &GmmNoveltyModel, trajectories: &[Trajectory]) -> Result<f64> {
    let logs = trajectories
        .iter()
        .map(|t| model.trajectory_log_prob(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_mean_exp(&logs))
}

/// Raw metric values of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub critical: f64,
    pub coverage: f64,
    pub distance: f64,
    pub traj: f64,
}

fn min_max(column: &[f64]) -> Vec<f64> {
    let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 0.0 && (hi - lo).is_finite() {
        column.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; column.len()]
    }
}

/// Inverse trajectory similarity. A similarity of zero maps to the largest
/// finite value so the column stays orderable.
pub fn inverse_traj(traj: f64) -> f64 {
    let v = 1.0 / traj;
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

/// Weighted sum of min-max normalised columns. A column without spread
/// contributes 0.5 for every row.
pub fn hybrid_score(rows: &[MetricRow]) -> Result<Vec<f64>> {
    let inverse: Vec<f64> = rows.iter().map(|r| inverse_traj(r.traj)).collect();
    hybrid_score_with_inverse(rows, &inverse)
}

/// [`hybrid_score`] with the inverse-similarity column supplied directly.
pub fn hybrid_score_with_inverse(rows: &[MetricRow], inverse: &[f64]) -> Result<Vec<f64>> {
    if rows.len() < 2 {
        return invalid("hybrid score needs at least two configurations");
    }
    if inverse.len() != rows.len() {
        return invalid("one inverse similarity per configuration is required");
    }
    let columns = [
        min_max(&rows.iter().map(|r| r.critical).collect::<Vec<_>>()),
        min_max(&rows.iter().map(|r| r.coverage).collect::<Vec<_>>()),
        min_max(&rows.iter().map(|r| r.distance).collect::<Vec<_>>()),
        min_max(inverse),
    ];
    Ok((0..rows.len())
        .map(|i| HYBRID_WEIGHTS.iter().zip(&columns).map(|(w, c)| w * c[i]).sum())
        .collect())
}

/// Diversity summary of one campaign's critical scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub critical_count: u64,
    pub coverage: u64,
    /// `None` when every dimension is non-metric.
    pub distance: Option<f64>,
    pub traj: f64,
    /// Natural log of `traj`.
    pub log_traj: f64,
    pub warnings: Vec<String>,
}

impl DiversityReport {
    /// Metrics over `scenarios` (with their trajectories) on `spec`.
    pub fn compute(
        spec: &ScenarioSpec,
        scenarios: &[Scenario],
        trajectories: &[Trajectory],
        metric_dims: &[bool],
        model: &GmmNoveltyModel,
    ) -> Result<Self> {
        if scenarios.len() != trajectories.len() {
            return invalid("every scenario needs its trajectory");
        }
        let mut warnings = Vec::new();
        let q = scenarios.len();
        let distance = if metric_dims.iter().any(|&m| m) {
            if q < 2 {
                warnings.push(format!("distance undefined for {q} scenario(s); reported as 0"));
            }
            let pts: Vec<&[f64]> = scenarios.iter().map(Scenario::params).collect();
            Some(mean_pairwise_distance(&pts, Some(metric_dims), DistanceNorm::Literal))
        } else {
            None
        };
        let (traj, log_traj) = if q == 0 || !model.is_fitted() {
            warnings.push("trajectory similarity undefined for an empty set; reported as 0".into());
            (0.0, f64::NEG_INFINITY)
        } else {
            let l = log_trajectory_similarity(model, trajectories)?;
            (l.exp(), l)
        };
        Ok(Self {
            critical_count: q as u64,
            coverage: coverage(scenarios, spec)?,
            distance,
            traj,
            log_traj,
            warnings,
        })
    }

    pub fn row(&self) -> MetricRow {
        MetricRow {
            critical: self.critical_count as f64,
            coverage: self.coverage as f64,
            distance: self.distance.unwrap_or(0.0),
            traj: self.traj,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid54() -> ScenarioSpec {
        ScenarioSpec::new(vec![(0.0, 5.0), (0.0, 4.0)], vec![5, 4]).unwrap()
    }

    fn sc(spec: &ScenarioSpec, v: &[f64]) -> Scenario {
        Scenario::checked(spec, v.to_vec()).unwrap()
    }

    #[test]
    fn coverage_examples() {
        let spec = grid54();
        assert_eq!(coverage(&[], &spec).unwrap(), 0);
        let same: Vec<Scenario> = (0..10).map(|i| sc(&spec, &[0.1 + 0.05 * i as f64, 0.5])).collect();
        assert_eq!(coverage(&same, &spec).unwrap(), 1);
        let three = [sc(&spec, &[0.2, 0.3]), sc(&spec, &[0.7, 0.9]), sc(&spec, &[4.5, 3.5])];
        assert_eq!(coverage(&three, &spec).unwrap(), 2);
    }

    #[test]
    fn distance_examples() {
        let a = [0.0, 0.0];
        let b = [3.0, 4.0];
        assert_eq!(mean_pairwise_distance(&[&a, &b], None, DistanceNorm::Literal), 5.0);
        let p: [[f64; 1]; 3] = [[0.0], [1.0], [2.0]];
        let pts: Vec<&[f64]> = p.iter().map(|x| &x[..]).collect();
        assert_eq!(mean_pairwise_distance(&pts, None, DistanceNorm::Literal), 8.0 / 3.0);
        assert_eq!(mean_pairwise_distance(&pts, None, DistanceNorm::PairMean), 4.0 / 3.0);
        let same = [1.5, -2.0];
        assert_eq!(mean_pairwise_distance(&[&same, &same, &same], None, DistanceNorm::Literal), 0.0);
        assert_eq!(mean_pairwise_distance(&[&a], None, DistanceNorm::Literal), 0.0);
    }

    #[test]
    fn masked_dimensions_are_dropped() {
        let a = [0.0, 0.0, 100.0];
        let b = [3.0, 4.0, -100.0];
        let m = [true, true, false];
        assert_eq!(mean_pairwise_distance(&[&a, &b], Some(&m), DistanceNorm::Literal), 5.0);
    }

    #[test]
    fn log_mean_exp_survives_underflow() {
        let l = log_mean_exp(&[-2000.0, -2000.0 + 2f64.ln()]);
        assert!((l - (-2000.0 + 1.5f64.ln())).abs() < 1e-9);
        assert_eq!(log_mean_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_mean_exp(&[-1.0]), -1.0);
    }

    #[test]
    fn hybrid_endpoints() {
        let hi = MetricRow {
            critical: 10.0,
            coverage: 5.0,
            distance: 3.0,
            traj: 0.1,
        };
        let lo = MetricRow {
            critical: 1.0,
            coverage: 1.0,
            distance: 1.0,
            traj: 0.9,
        };
        assert_eq!(hybrid_score(&[hi, lo]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(hybrid_score(&[hi, hi, hi]).unwrap(), vec![0.5; 3]);
        assert!(hybrid_score(&[hi]).is_err());
    }

    fn reference_sweep() -> Vec<MetricRow> {
        [
            (752.0, 98.0, 6775.98, 0.66e-3),
            (585.0, 113.0, 7343.27, 8.74e-3),
            (636.0, 111.0, 7529.82, 1.41e-3),
            (718.0, 130.0, 6702.47, 1.94e-3),
            (973.0, 135.0, 6211.37, 4.05e-3),
            (820.0, 150.0, 6369.71, 1.01e-3),
        ]
        .into_iter()
        .map(|(critical, coverage, distance, traj)| MetricRow {
            critical,
            coverage,
            distance,
            traj,
        })
        .collect()
    }

    #[test]
    fn published_alpha_sweep_ranks_point_eight_first() {
        let s = hybrid_score(&reference_sweep()).unwrap();
        let best = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        assert_eq!(best, 4);
    }

    proptest! {
        #[test]
        fn distance_permutation_and_scale(
            pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 2..12),
            c in 0.1f64..10.0,
            rot in 0usize..12,
        ) {
            let refs: Vec<&[f64]> = pts.iter().map(|p| &p[..]).collect();
            let d = mean_pairwise_distance(&refs, None, DistanceNorm::Literal);
            let mut perm = refs.clone();
            let len = perm.len();
            perm.rotate_left(rot % len);
            perm.reverse();
            let dp = mean_pairwise_distance(&perm, None, DistanceNorm::Literal);
            prop_assert!((d - dp).abs() <= 1e-9 * d.max(1.0));
            let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * c).collect()).collect();
            let sr: Vec<&[f64]> = scaled.iter().map(|p| &p[..]).collect();
            let ds = mean_pairwise_distance(&sr, None, DistanceNorm::Literal);
            prop_assert!((ds - c * d).abs() <= 1e-9 * (c * d).max(1.0));
        }

        #[test]
        fn coverage_is_monotone_and_order_free(
            pts in prop::collection::vec((0.0f64..=5.0, 0.0f64..=4.0), 0..30),
        ) {
            let spec = grid54();
            let all: Vec<Scenario> = pts.iter().map(|&(x, y)| sc(&spec, &[x, y])).collect();
            let mut prev = 0;
            for i in 0..=all.len() {
                let c = coverage(&all[..i], &spec).unwrap();
                prop_assert!(c >= prev);
                prev = c;
            }
            let mut rev = all.clone();
            rev.reverse();
            prop_assert_eq!(coverage(&rev, &spec).unwrap(), prev);
        }

        #[test]
        fn ranking_survives_affine_column_rescaling(
            vals in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0, 0.0f64..100.0, 0.001f64..1.0), 2..8),
            a in 0.1f64..10.0,
            b in -50.0f64..50.0,
            col in 0usize..3,
        ) {
            let rows: Vec<MetricRow> = vals
                .iter()
                .map(|&(critical, coverage, distance, traj)| MetricRow { critical, coverage, distance, traj })
                .collect();
            let moved: Vec<MetricRow> = rows
                .iter()
                .map(|r| {
                    let mut r = *r;
                    match col {
                        0 => r.critical = a * r.critical + b,
                        1 => r.coverage = a * r.coverage + b,
                        _ => r.distance = a * r.distance + b,
                    }
                    r
                })
                .collect();
            let s0 = hybrid_score(&rows).unwrap();
            let s1 = hybrid_score(&moved).unwrap();
            for i in 0..s0.len() {
                for j in 0..s0.len() {
                    if s0[i] - s0[j] > 1e-9 {
                        prop_assert!(s1[i] > s1[j]);
                    }
                }
            }
        }
    }
}
