//! Noisy utilities: repeated sampling, DeNoise, then exploitation. Prints the
//! confidence premises and a Monte Carlo estimate of the reward.

use bayes_explore::harness::StochasticPipeline;
use bayes_explore::rational::{q, to_f64};
use bayes_explore::{instances, NoiseModel, Result};

fn main() -> Result<()> {
    let u = instances::two_arm_strict();
    for rounds in [1_000, 10_000] {
        let p = StochasticPipeline::new(&u, NoiseModel::Bernoulli, rounds, q(1, 16))?;
        println!("T={rounds} T0={} phases={}", p.exploration_rounds(), p.plan().phases().len());
        for premise in p.premises(&u) {
            println!("  {premise}");
        }
        let mc = p.monte_carlo(&u, None, 11, 200)?;
        let target = (rounds - p.exploration_rounds()) as f64 * to_f64(p.benchmark());
        println!(
            "  mean reward {:.1} ± {:.1} (exploit-only target {target:.1}), wrong final set in {:.1}% of trials",
            mc.mean,
            mc.stderr,
            100.0 * mc.wrong_set_rate
        );
    }
    Ok(())
}
