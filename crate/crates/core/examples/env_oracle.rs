//! Brute-force oracles: the intercept slice map, Monte Carlo critical
//! measures and the corridor trap.

use dualfuzz::envs::{oracle, Intercept2d};

fn main() -> dualfuzz::Result<()> {
    let map = oracle::intercept_slice(&Intercept2d::new(), 40)?;
    for row in map.iter().step_by(2) {
        let line: String = row.iter().map(|&c| if c { '#' } else { '.' }).collect();
        println!("{line}");
    }
    print!("{}", oracle::summary(40, 5000, 0)?);
    Ok(())
}
