//! The Bayesian game: agents, joint actions, states, prior, utilities and
//! the principal's reward, plus the scalar quantities derived from them.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::rational::{fmt_q, is_unit_interval, sum, to_f64, Q};
use crate::signal::SignalStructure;

/// Flat index of a joint action. Row-major over agents in declaration order,
/// so the last agent's action varies fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointAction(pub usize);

impl JointAction {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Raw tables describing a game, before validation.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub action_names: Vec<Vec<String>>,
    pub state_names: Vec<String>,
    pub prior: Vec<Q>,
    /// `utilities[i][a][theta]`
    pub utilities: Vec<Vec<Vec<Q>>>,
    /// `reward[a][theta]`
    pub reward: Vec<Vec<Q>>,
}

/// One violated invariant of a [`GameSpec`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoAgents,
    NoStates,
    EmptyActionSet { agent: usize },
    Dimension(String),
    NegativePrior { state: usize },
    PriorNotNormalized { sum: Q },
    OutOfRange { table: String, value: Q },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAgents => write!(f, "game has no agents"),
            Violation::NoStates => write!(f, "state space is empty"),
            Violation::EmptyActionSet { agent } => write!(f, "agent {agent} has no actions"),
            Violation::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Violation::NegativePrior { state } => write!(f, "prior of state {state} is negative"),
            Violation::PriorNotNormalized { sum } => {
                write!(f, "prior sums to {} ({})", fmt_q(sum), to_f64(sum))
            }
            Violation::OutOfRange { table, value } => {
                write!(f, "entry out of range [0,1] in {table}: {}", fmt_q(value))
            }
        }
    }
}

impl GameSpec {
    /// Lists every violated invariant; `Ok(())` iff the tables describe a valid game.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.action_names.is_empty() {
            out.push(Violation::NoAgents);
        }
        if self.state_names.is_empty() {
            out.push(Violation::NoStates);
        }
        for (i, actions) in self.action_names.iter().enumerate() {
            if actions.is_empty() {
                out.push(Violation::EmptyActionSet { agent: i });
            }
        }
        let num_joint: usize = self.action_names.iter().map(Vec::len).product();
        let num_states = self.state_names.len();

        if self.prior.len() != num_states {
            out.push(Violation::Dimension(format!(
                "prior has {} entries for {} states",
                self.prior.len(),
                num_states
            )));
        }
        for (k, p) in self.prior.iter().enumerate() {
            if p.is_negative() {
                out.push(Violation::NegativePrior { state: k });
            }
        }
        let total = sum(&self.prior);
        if !total.is_one() {
            out.push(Violation::PriorNotNormalized { sum: total });
        }

        if self.utilities.len() != self.action_names.len() {
            out.push(Violation::Dimension(format!(
                "{} utility tables for {} agents",
                self.utilities.len(),
                self.action_names.len()
            )));
        }
        let mut check_table = |name: String, table: &Vec<Vec<Q>>| {
            if table.len() != num_joint {
                out.push(Violation::Dimension(format!(
                    "{name} has {} rows, expected |A| = {num_joint}",
                    table.len()
                )));
            }
            for row in table {
                if row.len() != num_states {
                    out.push(Violation::Dimension(format!(
                        "{name} row has {} entries, expected |Θ| = {num_states}",
                        row.len()
                    )));
                }
                for v in row {
                    if !is_unit_interval(v) {
                        out.push(Violation::OutOfRange { table: name.clone(), value: v.clone() });
                    }
                }
            }
        };
        for (i, table) in self.utilities.iter().enumerate() {
            check_table(format!("utilities of agent {i}"), table);
        }
        check_table("reward".to_string(), &self.reward);

        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// A validated game. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityStructure {
    spec: GameSpec,
    strides: Vec<usize>,
    num_joint: usize,
}

impl UtilityStructure {
    pub fn new(spec: GameSpec) -> Result<Self> {
        spec.validate().map_err(Error::InvalidStructure)?;
        let counts: Vec<usize> = spec.action_names.iter().map(Vec::len).collect();
        let mut strides = vec![1; counts.len()];
        for i in (0..counts.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        let num_joint = counts.iter().product();
        Ok(UtilityStructure { spec, strides, num_joint })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn num_agents(&self) -> usize {
        self.spec.action_names.len()
    }

    pub fn num_actions_of(&self, agent: usize) -> usize {
        self.spec.action_names[agent].len()
    }

    /// |A|, the number of joint actions.
    pub fn num_joint_actions(&self) -> usize {
        self.num_joint
    }

    pub fn num_states(&self) -> usize {
        self.spec.state_names.len()
    }

    pub fn joint_actions(&self) -> impl Iterator<Item = JointAction> {
        (0..self.num_joint).map(JointAction)
    }

    pub fn prior(&self, state: usize) -> &Q {
        &self.spec.prior[state]
    }

    pub fn priors(&self) -> &[Q] {
        &self.spec.prior
    }

    pub fn utility(&self, agent: usize, a: JointAction, state: usize) -> &Q {
        &self.spec.utilities[agent][a.0][state]
    }

    pub fn reward(&self, a: JointAction, state: usize) -> &Q {
        &self.spec.reward[a.0][state]
    }

    /// `(f; u_1 .. u_n)` at `(a, state)`.
    pub fn outcome(&self, a: JointAction, state: usize) -> Vec<Q> {
        std::iter::once(self.reward(a, state).clone())
            .chain((0..self.num_agents()).map(|i| self.utility(i, a, state).clone()))
            .collect()
    }

    pub fn agent_action(&self, a: JointAction, agent: usize) -> usize {
        (a.0 / self.strides[agent]) % self.num_actions_of(agent)
    }

    pub fn decompose(&self, a: JointAction) -> Vec<usize> {
        (0..self.num_agents()).map(|i| self.agent_action(a, i)).collect()
    }

    pub fn compose(&self, actions: &[usize]) -> Result<JointAction> {
        if actions.len() != self.num_agents() {
            return Err(Error::Dimension(format!(
                "joint action has {} components for {} agents",
                actions.len(),
                self.num_agents()
            )));
        }
        let mut flat = 0;
        for (i, &ai) in actions.iter().enumerate() {
            if ai >= self.num_actions_of(i) {
                return Err(Error::Dimension(format!("action {ai} out of range for agent {i}")));
            }
            flat += ai * self.strides[i];
        }
        Ok(JointAction(flat))
    }

    /// `a` with agent `agent`'s component replaced by `action`.
    pub fn with_agent_action(&self, a: JointAction, agent: usize, action: usize) -> JointAction {
        let current = self.agent_action(a, agent);
        JointAction(a.0 - current * self.strides[agent] + action * self.strides[agent])
    }

    pub fn action_name(&self, a: JointAction) -> String {
        let names: Vec<&str> = self
            .decompose(a)
            .iter()
            .enumerate()
            .map(|(i, &ai)| self.spec.action_names[i][ai].as_str())
            .collect();
        if names.len() == 1 {
            names[0].to_string()
        } else {
            format!("({})", names.join(","))
        }
    }

    pub fn agent_action_name(&self, agent: usize, action: usize) -> &str {
        &self.spec.action_names[agent][action]
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.spec.state_names[state]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.spec.state_names.iter().position(|s| s == name)
    }

    pub fn positive_prior_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&k| self.prior(k).is_positive())
    }

    /// Draws a state from the prior.
    pub fn sample_state<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for k in self.positive_prior_states() {
            acc += to_f64(self.prior(k));
            last = k;
            if u < acc {
                return k;
            }
        }
        last
    }

    /// Expected value of `(f; u_1..u_n)` per joint action under a state distribution.
    pub fn mean_reward_under(&self, a: JointAction, weights: &[Q]) -> Q {
        weights
            .iter()
            .enumerate()
            .fold(Q::zero(), |acc, (k, w)| acc + w * self.reward(a, k))
    }
}

/// Minimum nonzero cross-state gap of any agent's utility.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Separation {
    Gap(Q),
    /// Every agent utility is state-independent; no separation is needed.
    StateIndependent,
}

impl Separation {
    pub fn gap(&self) -> Option<&Q> {
        match self {
            Separation::Gap(z) => Some(z),
            Separation::StateIndependent => None,
        }
    }
}

pub fn separation_parameter(u: &UtilityStructure) -> Separation {
    let mut best: Option<Q> = None;
    for i in 0..u.num_agents() {
        for a in u.joint_actions() {
            for s in 0..u.num_states() {
                for t in (s + 1)..u.num_states() {
                    let gap = (u.utility(i, a, s) - u.utility(i, a, t)).abs();
                    if gap.is_zero() {
                        continue;
                    }
                    if best.as_ref().is_none_or(|b| gap < *b) {
                        best = Some(gap);
                    }
                }
            }
        }
    }
    match best {
        Some(z) => Separation::Gap(z),
        None => Separation::StateIndependent,
    }
}

/// Unnormalized left-hand side of the BIC constraint for agent `agent`
/// recommended `action` and considering a deviation to `deviation`:
/// `E[1{rec_i = action} · (u_i(action, a_-i) - u_i(deviation, a_-i))]`.
pub fn conditional_gain(
    u: &UtilityStructure,
    signal: &SignalStructure,
    x: &PolicyTable,
    agent: usize,
    action: usize,
    deviation: usize,
) -> Result<Q> {
    check_policy_dims(u, signal, x)?;
    let mut total = Q::zero();
    for a in u.joint_actions().filter(|&a| u.agent_action(a, agent) == action) {
        let dev = u.with_agent_action(a, agent, deviation);
        for s in 0..signal.num_signals() {
            let weight = x.get(a, s);
            if weight.is_zero() {
                continue;
            }
            let mut inner = Q::zero();
            for state in 0..u.num_states() {
                let joint = signal.prob(s, state);
                if joint.is_zero() {
                    continue;
                }
                inner += u.prior(state) * joint * (u.utility(agent, a, state) - u.utility(agent, dev, state));
            }
            total += inner * weight;
        }
    }
    Ok(total)
}

pub(crate) fn check_policy_dims(
    u: &UtilityStructure,
    signal: &SignalStructure,
    x: &PolicyTable,
) -> Result<()> {
    if x.num_signals() != signal.num_signals() || x.num_actions() != u.num_joint_actions() {
        return Err(Error::Dimension(format!(
            "policy table is {}x{}, expected {} signals x {} joint actions",
            x.num_signals(),
            x.num_actions(),
            signal.num_signals(),
            u.num_joint_actions()
        )));
    }
    if signal.num_states() != u.num_states() {
        return Err(Error::Dimension("signal structure and game disagree on |Θ|".into()));
    }
    Ok(())
}

/// How realized utilities are generated from their means.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    #[default]
    Deterministic,
    /// Each coordinate drawn independently as Bernoulli(mean).
    Bernoulli,
}

impl NoiseModel {
    /// Realized `(f; u_1..u_n)` for joint action `a` at state `state`.
    pub fn realize<R: RngCore + ?Sized>(
        &self,
        u: &UtilityStructure,
        a: JointAction,
        state: usize,
        rng: &mut R,
    ) -> Vec<Q> {
        let means = u.outcome(a, state);
        match self {
            NoiseModel::Deterministic => means,
            NoiseModel::Bernoulli => means
                .iter()
                .map(|m| {
                    let p = to_f64(m).clamp(0.0, 1.0);
                    if rng.gen_bool(p) {
                        Q::one()
                    } else {
                        Q::zero()
                    }
                })
                .collect(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, NoiseModel::Deterministic)
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Deterministic => f.write_str("deterministic"),
            NoiseModel::Bernoulli => f.write_str("bernoulli"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::rational::{q, qi};
    use crate::signal::empty_signal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_arm_example_is_valid() {
        let u = instances::two_arm();
        assert_eq!(u.num_joint_actions(), 2);
        assert_eq!(u.num_states(), 4);
        assert!(u.spec().validate().is_ok());
    }

    #[test]
    fn rejects_unnormalized_prior() {
        let mut spec = instances::single_action_two_states(q(1, 5), q(9, 10)).spec().clone();
        spec.prior = vec![q(1, 2), q(3, 5)];
        let err = spec.validate().unwrap_err();
        assert_eq!(err, vec![Violation::PriorNotNormalized { sum: q(11, 10) }]);
        assert_eq!(err[0].to_string(), "prior sums to 11/10 (1.1)");
    }

    #[test]
    fn rejects_out_of_range_entry() {
        let mut spec = instances::two_arm().spec().clone();
        spec.utilities[0][1][2] = q(3, 2);
        let err = spec.validate().unwrap_err();
        assert!(matches!(err[0], Violation::OutOfRange { .. }));
        assert!(err[0].to_string().contains("entry out of range"));
        assert!(UtilityStructure::new(spec).is_err());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let mut spec = instances::two_arm().spec().clone();
        spec.reward.pop();
        let err = spec.validate().unwrap_err();
        assert!(matches!(err[0], Violation::Dimension(_)));
    }

    #[test]
    fn joint_action_indexing_is_row_major() {
        let u = instances::random_instance(&mut ChaCha8Rng::seed_from_u64(3), &instances::RandomParams {
            agents: 2,
            max_actions: 3,
            max_states: 2,
            grid: 8,
        });
        let k1 = u.num_actions_of(1);
        for a in u.joint_actions() {
            let parts = u.decompose(a);
            assert_eq!(parts[0] * k1 + parts[1], a.0);
            assert_eq!(u.compose(&parts).unwrap(), a);
            for alt in 0..u.num_actions_of(0) {
                let b = u.with_agent_action(a, 0, alt);
                assert_eq!(u.agent_action(b, 0), alt);
                assert_eq!(u.agent_action(b, 1), parts[1]);
            }
        }
    }

    #[test]
    fn separation_of_two_arm_example_is_one_half() {
        // Brute force over (i, a, θ, θ').
        let u = instances::two_arm();
        let mut gaps = Vec::new();
        for a in u.joint_actions() {
            for s in 0..4 {
                for t in 0..4 {
                    let g = (u.utility(0, a, s) - u.utility(0, a, t)).abs();
                    if !g.is_zero() {
                        gaps.push(g);
                    }
                }
            }
        }
        let oracle = gaps.into_iter().min().unwrap();
        assert_eq!(oracle, q(1, 2));
        assert_eq!(separation_parameter(&u), Separation::Gap(q(1, 2)));
    }

    #[test]
    fn separation_single_pair_and_sentinel() {
        let u = instances::single_action_two_states(q(1, 5), q(9, 10));
        assert_eq!(separation_parameter(&u), Separation::Gap(q(7, 10)));
        let flat = instances::constant_utility(q(1, 3));
        assert_eq!(separation_parameter(&flat), Separation::StateIndependent);
    }

    #[test]
    fn separation_invariant_under_state_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = instances::random_instance(&mut rng, &instances::RandomParams::default());
            let mut spec = u.spec().clone();
            spec.state_names.reverse();
            spec.prior.reverse();
            for table in spec.utilities.iter_mut() {
                for row in table.iter_mut() {
                    row.reverse();
                }
            }
            for row in spec.reward.iter_mut() {
                row.reverse();
            }
            let permuted = UtilityStructure::new(spec).unwrap();
            assert_eq!(separation_parameter(&u), separation_parameter(&permuted));
        }
    }

    #[test]
    fn gain_of_always_first_arm_on_empty_signal() {
        // Direct sum over the four states: E[R1] - E[R2] = 3/4 - 1/2.
        let u = instances::two_arm();
        let s = empty_signal(&u);
        let x = PolicyTable::point_mass(1, 2, JointAction(0));
        let oracle: Q = (0..4)
            .map(|k| u.prior(k) * (u.utility(0, JointAction(0), k) - u.utility(0, JointAction(1), k)))
            .fold(Q::zero(), |a, b| a + b);
        assert_eq!(oracle, q(1, 4));
        assert_eq!(conditional_gain(&u, &s, &x, 0, 0, 1).unwrap(), q(1, 4));
        // nobody is recommended a2, so its gain is zero
        assert_eq!(conditional_gain(&u, &s, &x, 0, 1, 0).unwrap(), Q::zero());
    }

    #[test]
    fn gain_vanishes_for_constant_utilities() {
        let u = instances::constant_utility(q(2, 5));
        let s = empty_signal(&u);
        let n = u.num_joint_actions();
        let x = PolicyTable::new(vec![vec![Q::one() / qi(n as i64); n]]).unwrap();
        for i in 0..u.num_agents() {
            for a in 0..u.num_actions_of(i) {
                for b in 0..u.num_actions_of(i) {
                    assert!(conditional_gain(&u, &s, &x, i, a, b).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn gain_rejects_mismatched_table() {
        let u = instances::two_arm();
        let s = empty_signal(&u);
        let x = PolicyTable::point_mass(2, 2, JointAction(0));
        assert!(matches!(conditional_gain(&u, &s, &x, 0, 0, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn bernoulli_draws_are_binary_and_deterministic_returns_means() {
        let u = instances::two_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let v = NoiseModel::Bernoulli.realize(&u, JointAction(0), 0, &mut rng);
            assert!(v.iter().all(|x| x.is_zero() || x.is_one()));
        }
        assert_eq!(
            NoiseModel::Deterministic.realize(&u, JointAction(0), 0, &mut rng),
            u.outcome(JointAction(0), 0)
        );
    }
}
