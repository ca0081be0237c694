//! Draws global-exploration targets and counts how often the directional
//! branch is taken for several values of alpha.

use dualfuzz::generator::{explore_global, Branch, GeneratorConfig};
use dualfuzz::rng::{stream, Stream};
use dualfuzz::space::{ScenarioSpec, SubspaceGrid};

fn main() -> dualfuzz::Result<()> {
    let spec = ScenarioSpec::uniform(vec![(0.0, 1.0); 2], 8)?;
    let mut grid = SubspaceGrid::new(spec.clone());
    grid.record_test(&spec.subspace(vec![2, 5])?, true);
    grid.record_test(&spec.subspace(vec![6, 1])?, false);

    for alpha in [0.0, 0.2, 0.5, 0.8, 1.0] {
        let cfg = GeneratorConfig {
            alpha,
            ..GeneratorConfig::default()
        };
        let mut rng = stream(3, Stream::Exploration);
        let n = 5000;
        let hits = (0..n)
            .filter(|_| explore_global(&grid, &cfg, &mut rng).branch == Branch::Directional)
            .count();
        println!("alpha {alpha:.1}: directional {:.3}", hits as f64 / n as f64);
    }
    Ok(())
}
