//! Exact incentive audits of recommendation tables.

use std::fmt;

use crate::error::Result;
use crate::explore::Verdict;
use crate::game::UtilityStructure;
use crate::policy::{deviation_checks, DeviationCheck, PolicyTable};
use crate::rational::{fmt_q, Q};
use crate::signal::SignalStructure;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub delta: Q,
    pub checks: Vec<DeviationCheck>,
}

/// A violated deviation constraint, with the agent numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub agent: usize,
    pub action: String,
    pub deviation: String,
    pub margin: Q,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(i={}, {}, {}) margin {}", self.agent, self.action, self.deviation, fmt_q(&self.margin))
    }
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(DeviationCheck::holds)
    }

    pub fn min_margin(&self) -> Option<Q> {
        self.checks.iter().map(DeviationCheck::margin).min()
    }

    pub fn violations(&self, u: &UtilityStructure) -> Vec<Violation> {
        self.checks
            .iter()
            .filter(|c| !c.holds())
            .map(|c| Violation {
                agent: c.agent + 1,
                action: u.agent_action_name(c.agent, c.action).to_string(),
                deviation: u.agent_action_name(c.agent, c.deviation).to_string(),
                margin: c.margin(),
            })
            .collect()
    }

    pub fn verdict(&self, u: &UtilityStructure) -> Verdict {
        match self.violations(u).into_iter().min_by(|a, b| a.margin.cmp(&b.margin)) {
            None => Verdict::Pass { min_margin: self.min_margin().map_or_else(|| "0".into(), |m| fmt_q(&m)) },
            Some(v) => Verdict::Fail { agent: v.agent, action: v.action, deviation: v.deviation, margin: fmt_q(&v.margin) },
        }
    }
}

/// Evaluates every `(i, a_i, a_i')` constraint of the δ-strengthened
/// incentive condition at `x` in exact arithmetic.
pub fn audit_bic(u: &UtilityStructure, signal: &SignalStructure, x: &PolicyTable, delta: &Q) -> Result<AuditReport> {
    Ok(AuditReport { delta: delta.clone(), checks: deviation_checks(u, signal, x, delta)? })
}
