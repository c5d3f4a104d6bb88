//! One exploration phase for a column (3/4, 1/4): each explorable action gets
//! a dedicated round and the others follow the remainder distribution. Every
//! round's marginal equals the column.

use bayes_explore::explore::det::PhasePlan;
use bayes_explore::rational::{fmt_q, q};
use bayes_explore::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let plan = PhasePlan::from_column(&[q(3, 4), q(1, 4)])?;
    let rem: Vec<String> = plan.remainder().iter().map(fmt_q).collect();
    println!("duration {} remainder [{}]", plan.duration(), rem.join(", "));

    let trials = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut hits = vec![0usize; plan.duration()];
    for _ in 0..trials {
        for (t, a) in plan.sample_schedule(&mut rng).iter().enumerate() {
            if a.0 == 0 {
                hits[t] += 1;
            }
        }
    }
    for (t, h) in hits.iter().enumerate() {
        println!("round {t}: freq(a1) = {:.4}  target {}", *h as f64 / trials as f64, fmt_q(plan.target(0)));
    }
    Ok(())
}
