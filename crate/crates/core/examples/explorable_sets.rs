//! Signal-explorable sets of the two-arm game under the empty signal and
//! under full information about arm 1, then the eventually-explorable map.

use std::collections::BTreeSet;

use bayes_explore::explore::det::oracle_explorable_map;
use bayes_explore::policy::explorable_set;
use bayes_explore::rational::fmt_q;
use bayes_explore::signal::{all_info, empty_signal};
use bayes_explore::{instances, JointAction, Q, Result, UtilityStructure};

fn names(u: &UtilityStructure, set: &BTreeSet<JointAction>) -> String {
    let v: Vec<String> = set.iter().map(|&a| u.action_name(a)).collect();
    format!("{{{}}}", v.join(", "))
}

fn main() -> Result<()> {
    let u = instances::two_arm();
    let delta = Q::from_integer(0.into());

    let empty = explorable_set(&u, &empty_signal(&u), &delta)?;
    println!("no information: {}", names(&u, &empty.sets[0]));

    let arm1 = vec![[JointAction(0)].into_iter().collect::<BTreeSet<_>>(); u.num_states()];
    let s = all_info(&u, &arm1)?;
    let ex = explorable_set(&u, &s, &delta)?;
    for k in 0..s.num_signals() {
        let best = ex.eta[k].iter().map(fmt_q).collect::<Vec<_>>().join(", ");
        println!("signal {}: EX = {}  max prob per action = [{best}]", s.value(k), names(&u, &ex.sets[k]));
    }

    println!("eventually explorable:");
    for (state, set) in oracle_explorable_map(&u, &delta)?.iter().enumerate() {
        println!("  {:<10} {}", u.state_name(state), names(&u, set));
    }
    Ok(())
}
