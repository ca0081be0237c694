//! Coverage, pairwise distance and hybrid scoring of a few configurations.

use dualfuzz::metrics::{coverage, hybrid_score, mean_pairwise_distance, DistanceNorm, MetricRow};
use dualfuzz::space::{Scenario, ScenarioSpec};

fn main() -> dualfuzz::Result<()> {
    let spec = ScenarioSpec::new(vec![(0.0, 5.0), (0.0, 4.0)], vec![5, 4])?;
    let found: Vec<Scenario> = [[0.2, 0.3], [0.8, 0.9], [3.3, 2.2], [4.9, 3.1]]
        .iter()
        .map(|p| Scenario::checked(&spec, p.to_vec()))
        .collect::<dualfuzz::Result<_>>()?;
    let pts: Vec<&[f64]> = found.iter().map(Scenario::params).collect();
    println!("coverage {}", coverage(&found, &spec)?);
    println!("distance {:.4}", mean_pairwise_distance(&pts, None, DistanceNorm::Literal));
    println!("mean pair distance {:.4}", mean_pairwise_distance(&pts, None, DistanceNorm::PairMean));

    let rows = [
        MetricRow { critical: 120.0, coverage: 40.0, distance: 3.1, traj: 2e-3 },
        MetricRow { critical: 150.0, coverage: 25.0, distance: 2.4, traj: 5e-3 },
        MetricRow { critical: 90.0, coverage: 55.0, distance: 3.6, traj: 1e-3 },
    ];
    for (i, s) in hybrid_score(&rows)?.iter().enumerate() {
        println!("configuration {i}: hybrid score {s:.3}");
    }
    Ok(())
}
