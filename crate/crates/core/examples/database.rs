//! Seeds a scenario database and applies the admission rule to perturbed
//! scenarios.

use dualfuzz::database::{sensitivity, Origin, ScenarioDatabase};
use dualfuzz::envs::{Environment, Walker1d};
use dualfuzz::generator::{perturb_local, GeneratorConfig};
use dualfuzz::rng::{stream, Stream};
use dualfuzz::space::ScenarioSpec;

fn main() -> dualfuzz::Result<()> {
    let env = Walker1d::new();
    let spec = ScenarioSpec::uniform(env.bounds(), 3)?;
    let mut rng = stream(1, Stream::InitSampling);
    let (mut db, _) = ScenarioDatabase::init(&env, &spec, 50, Some(200), &mut rng)?;
    println!("initial pool {} scenarios, {} critical archived", db.base().len(), db.critical().len());

    let cfg = GeneratorConfig::default();
    let mut prng = stream(1, Stream::Perturbation);
    for _ in 0..20 {
        let base = db.select_base_local(&mut rng)?.clone();
        let s = perturb_local(&spec, &base.scenario, &cfg, &mut prng);
        let ep = env.run(s.params())?;
        let sigma = sensitivity(base.task_score, ep.score, &base.scenario, &s)?;
        db.update_sensitivity(base.id, sigma);
        let rec = db.new_record(s, &ep, None, Origin::Perturbed(base.id));
        // without a novelty model every trajectory counts as novel
        let outcome = db.maybe_admit(rec, Some(base.task_score), f64::NEG_INFINITY);
        println!("base {:>3} score {:>8.3} -> {:>8.3} sigma {:>7.3} {}", base.id, base.task_score, ep.score, sigma, outcome.as_str());
    }
    println!("pool {} scenarios, {} critical archived", db.base().len(), db.critical().len());
    Ok(())
}
