//! Runs one scenario in each built-in environment and prints the episode
//! summary.

use dualfuzz::envs::{self, oracle, ENV_NAMES};

fn main() -> dualfuzz::Result<()> {
    for name in ENV_NAMES {
        let env = envs::by_name(name)?;
        let bounds = env.bounds();
        println!("{name}: {} parameters, preset {}", bounds.len(), env.preset().name());
        for s in oracle::uniform_samples(env.as_ref(), 3, 4) {
            let ep = env.run(&s)?;
            let v: Vec<&str> = ep.violations().iter().map(|c| c.as_str()).collect();
            println!("  {} steps, score {:>8.3}, critical {:5} {v:?}", ep.steps.len(), ep.score, ep.critical);
        }
    }
    Ok(())
}
