//! Full deterministic pipeline on the two-arm game: phased exploration, then
//! the optimal policy for what was learned. Prints the trace and the regret.

use bayes_explore::harness::DeterministicPipeline;
use bayes_explore::{instances, Result};

fn main() -> Result<()> {
    let u = instances::two_arm();
    let pipeline = DeterministicPipeline::new(&u)?;
    println!("exploration phases: {}", pipeline.plan().phases().len());
    for state in 0..u.num_states() {
        let chain: Vec<String> = pipeline
            .plan()
            .explored_chain(state)
            .iter()
            .map(|b| format!("{:?}", b.iter().map(|&a| u.action_name(a)).collect::<Vec<_>>()))
            .collect();
        println!("  {:<10} {}", u.state_name(state), chain.join(" -> "));
    }

    let trace = pipeline.run(&u, 24, Some(1), 7)?;
    for r in &trace.records {
        println!("{:>3} {:<7} {:<3} audit={}", r.round, r.phase, r.action, r.audit.passed());
    }
    for t in [100, 1000, 10_000] {
        let rep = pipeline.report(t, 7)?;
        println!("T={t:<6} T0={} regret={}", rep.exploration_rounds, rep.regret);
    }
    Ok(())
}
