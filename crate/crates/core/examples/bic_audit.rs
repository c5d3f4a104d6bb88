//! Exact incentive audit: the exploitation policy passes, and swapping its
//! columns for the two low-arm-1 states makes one deviation profitable.

use bayes_explore::harness::{audit_bic, DeterministicPipeline};
use bayes_explore::rational::fmt_q;
use bayes_explore::{instances, Q, Result};

fn main() -> Result<()> {
    let u = instances::two_arm();
    let zero = Q::from_integer(0.into());
    let pipeline = DeterministicPipeline::new(&u)?;
    let s = pipeline.plan().final_structure();
    let mut x = pipeline.exploit_table().clone();

    let report = audit_bic(&u, s, &x, &zero)?;
    let margin = report.min_margin().map(|m| fmt_q(&m)).unwrap_or_default();
    println!("exploit policy: passed={} min margin {margin}", report.passed());

    let (low_zero, low_one) = (s.signal_at(0).expect("feasible"), s.signal_at(1).expect("feasible"));
    x.swap_columns(low_zero, low_one);
    let report = audit_bic(&u, s, &x, &zero)?;
    println!("swapped columns: passed={}", report.passed());
    for v in report.violations(&u) {
        println!("  violated {v}");
    }
    Ok(())
}
