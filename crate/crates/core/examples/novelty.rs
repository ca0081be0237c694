//! Fits the trajectory novelty model online and scores familiar and unusual
//! episodes.

use dualfuzz::envs::{oracle, Environment, Intercept2d};
use dualfuzz::novelty::{novelty_threshold, GmmNoveltyModel, ModelConfig, NoveltyConfig};

fn main() -> dualfuzz::Result<()> {
    let env = Intercept2d::new();
    let mut model = GmmNoveltyModel::new(ModelConfig::default())?;
    let mut history = Vec::new();
    for s in oracle::uniform_samples(&env, 300, 5) {
        let traj = env.run(&s)?.trajectory();
        if model.is_fitted() {
            history.push(model.trajectory_log_prob(&traj)?);
        }
        model.fit_online(&traj)?;
    }
    let threshold = novelty_threshold(&NoveltyConfig::default(), &history);
    println!("absorbed {} trajectories, learning rate now {:.4}", model.observed_count(), model.learning_rate());
    println!("novelty threshold (lower quartile): {threshold:.2}");

    for s in oracle::uniform_samples(&env, 5, 99) {
        let ep = env.run(&s)?;
        let lp = model.trajectory_log_prob(&ep.trajectory())?;
        let tag = if lp < threshold { "novel" } else { "familiar" };
        println!("critical {:5} log-prob {lp:>10.2} {tag}", ep.critical);
    }
    Ok(())
}
