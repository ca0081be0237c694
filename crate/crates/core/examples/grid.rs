//! Tessellates a 2-D box, records tests and queries the cell statistics.

use dualfuzz::space::{Scenario, ScenarioSpec, SubspaceGrid};

fn main() -> dualfuzz::Result<()> {
    let spec = ScenarioSpec::new(vec![(0.0, 4.0), (0.0, 5.0)], vec![4, 5])?;
    println!("{} cells, partition points on x: {:?}", spec.total_cells(), spec.partition_points(0));

    let mut grid = SubspaceGrid::new(spec.clone());
    let tests = [([1.5, 1.2], true), ([1.1, 1.9], false), ([1.7, 1.0], false), ([3.5, 4.5], true)];
    for (p, critical) in tests {
        let s = Scenario::checked(&spec, p.to_vec())?;
        let cell = spec.abstract_scenario(&s)?;
        grid.record_test(&cell, critical);
        println!("{p:?} -> cell {} {:?}", cell.label, cell.multi_index);
    }

    let s6 = grid.stats(6);
    println!("S6: D = {}, F = {}, K = {:.3}", s6.density, s6.critical_count, s6.criticality());
    let hood: Vec<u64> = spec.neighbors(&spec.index_of(6)?).iter().map(|c| c.label).collect();
    println!("neighbours of S6: {hood:?}");
    let top: Vec<u64> = grid.top_k_critical(2).iter().map(|c| c.label).collect();
    println!("top-2 cells by criticality: {top:?}");
    println!("untested cells: {}", grid.zero_density_subspaces().len());
    Ok(())
}
