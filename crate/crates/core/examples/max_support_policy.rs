//! A single BIC policy whose support covers every explorable action, and the
//! reward-optimal policy for comparison.

use std::collections::BTreeSet;

use bayes_explore::policy::{max_support_policy, optimal_policy};
use bayes_explore::rational::fmt_q;
use bayes_explore::signal::all_info;
use bayes_explore::{instances, JointAction, Q, Result};

fn main() -> Result<()> {
    let u = instances::two_arm();
    let zero = Q::from_integer(0.into());
    let arm1 = vec![[JointAction(0)].into_iter().collect::<BTreeSet<_>>(); u.num_states()];
    let s = all_info(&u, &arm1)?;

    let msp = max_support_policy(&u, &s, &zero)?;
    println!("max-support policy (p_min = {}):", fmt_q(&msp.pmin_value));
    println!("{}", serde_json::to_string_pretty(&msp.table.to_json(&u, &s))?);

    let (opt, reward) = optimal_policy(&u, &s, &zero)?;
    println!("optimal policy, expected reward {}:", fmt_q(&reward));
    println!("{}", serde_json::to_string_pretty(&opt.to_json(&u, &s))?);
    Ok(())
}
