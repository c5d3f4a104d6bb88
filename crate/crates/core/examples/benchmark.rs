//! Benchmark rewards of the bundled games, exact and at a positive slack.

use bayes_explore::harness::benchmark;
use bayes_explore::rational::{fmt_q, q, to_f64};
use bayes_explore::{instances, Q, Result};

fn main() -> Result<()> {
    let games = [
        ("two_arm", instances::two_arm()),
        ("two_arm_strict", instances::two_arm_strict()),
        ("dominant_action", instances::dominant_action()),
    ];
    for (name, u) in &games {
        for delta in [Q::from_integer(0.into()), q(1, 16)] {
            let b = benchmark(u, &delta)?;
            println!("{name:<16} delta={:<5} benchmark={} ({:.4})", fmt_q(&delta), fmt_q(&b), to_f64(&b));
        }
    }
    Ok(())
}
