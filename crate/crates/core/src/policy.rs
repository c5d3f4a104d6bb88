//! The recommendation game: BIC and δ-BIC polytopes, optimal policies,
//! signal-explorable sets and max-support policies.
//!
//! A policy is represented by its LP variables `x[a, s] = Pr[π(s) = a]`.
//! Variables are laid out signal-major: index `s * |A| + a`.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::game::{check_policy_dims, conditional_gain, JointAction, UtilityStructure};
use crate::lp::{Constraint, FeasibleRegion, LpStatus, Relation};
use crate::rational::{fmt_q, qi, sum, Q};
use crate::signal::SignalStructure;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyTable {
    /// `columns[s][a]`
    columns: Vec<Vec<Q>>,
}

impl PolicyTable {
    /// Every column must be a probability vector over joint actions.
    pub fn new(columns: Vec<Vec<Q>>) -> Result<Self> {
        let width = columns.first().map_or(0, Vec::len);
        for (s, col) in columns.iter().enumerate() {
            if col.len() != width {
                return Err(Error::Dimension("ragged policy table".into()));
            }
            if col.iter().any(Signed::is_negative) || !sum(col).is_one() {
                return Err(Error::Dimension(format!("column {s} is not a distribution")));
            }
        }
        Ok(PolicyTable { columns })
    }

    pub fn point_mass(num_signals: usize, num_actions: usize, a: JointAction) -> Self {
        let mut col = vec![Q::zero(); num_actions];
        col[a.0] = Q::one();
        PolicyTable { columns: vec![col; num_signals] }
    }

    fn from_lp_vector(x: &[Q], num_signals: usize, num_actions: usize) -> Self {
        PolicyTable { columns: (0..num_signals).map(|s| x[s * num_actions..(s + 1) * num_actions].to_vec()).collect() }
    }

    pub fn num_signals(&self) -> usize {
        self.columns.len()
    }

    pub fn num_actions(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn get(&self, a: JointAction, s: usize) -> &Q {
        &self.columns[s][a.0]
    }

    pub fn column(&self, s: usize) -> &[Q] {
        &self.columns[s]
    }

    pub fn columns(&self) -> &[Vec<Q>] {
        &self.columns
    }

    pub fn support(&self, s: usize) -> BTreeSet<JointAction> {
        self.columns[s]
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(a, _)| JointAction(a))
            .collect()
    }

    /// Smallest positive entry over all columns.
    pub fn pmin(&self) -> Option<Q> {
        self.columns.iter().flatten().filter(|p| p.is_positive()).min().cloned()
    }

    /// Swaps two signal columns; used to build deliberately broken policies.
    pub fn swap_columns(&mut self, s: usize, t: usize) {
        self.columns.swap(s, t);
    }

    /// Convex combination `Σ w_k · x_k`; weights must sum to one.
    pub fn mix(parts: &[(Q, &PolicyTable)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Parameter("empty mixture".into()))?.1;
        let mut columns = vec![vec![Q::zero(); first.num_actions()]; first.num_signals()];
        for (w, table) in parts {
            if table.num_signals() != first.num_signals() || table.num_actions() != first.num_actions() {
                return Err(Error::Dimension("mixture components differ in shape".into()));
            }
            for (dst, src) in columns.iter_mut().zip(&table.columns) {
                for (d, v) in dst.iter_mut().zip(src) {
                    if !v.is_zero() {
                        *d += w * v;
                    }
                }
            }
        }
        PolicyTable::new(columns)
    }

    /// `Σ_{θ,s,a} ψ(θ) ψ̂(s|θ) x[a,s] f(a,θ)`
    pub fn expected_reward(&self, u: &UtilityStructure, signal: &SignalStructure) -> Q {
        let mut total = Q::zero();
        for s in 0..signal.num_signals() {
            for state in 0..u.num_states() {
                let w = u.prior(state) * signal.prob(s, state);
                if w.is_zero() {
                    continue;
                }
                for (a, p) in self.columns[s].iter().enumerate() {
                    if !p.is_zero() {
                        total += &w * p * u.reward(JointAction(a), state);
                    }
                }
            }
        }
        total
    }

    /// `{signal → {action → "p/q"}}`, listing positive entries only.
    pub fn to_json(&self, u: &UtilityStructure, signal: &SignalStructure) -> Value {
        let mut out = Map::new();
        for s in 0..self.num_signals() {
            let mut col = Map::new();
            for (a, p) in self.columns[s].iter().enumerate() {
                if p.is_positive() {
                    col.insert(u.action_name(JointAction(a)), Value::String(fmt_q(p)));
                }
            }
            out.insert(signal.value(s).to_string(), Value::Object(col));
        }
        Value::Object(out)
    }
}

/// One deviation constraint evaluated at a policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviationCheck {
    pub agent: usize,
    pub action: usize,
    pub deviation: usize,
    /// Unnormalized expected gain of following over deviating.
    pub gain: Q,
    /// `δ · Pr[rec_i = action]`
    pub required: Q,
}

impl DeviationCheck {
    pub fn margin(&self) -> Q {
        &self.gain - &self.required
    }

    pub fn holds(&self) -> bool {
        !self.margin().is_negative()
    }
}

/// Evaluates every `(i, a_i, a_i')` constraint of `BIC_δ[S]` at `x`.
pub fn deviation_checks(
    u: &UtilityStructure,
    signal: &SignalStructure,
    x: &PolicyTable,
    delta: &Q,
) -> Result<Vec<DeviationCheck>> {
    check_policy_dims(u, signal, x)?;
    let masses: Vec<Q> = (0..signal.num_signals()).map(|s| signal.mass(u, s)).collect();
    let mut out = Vec::new();
    for agent in 0..u.num_agents() {
        for action in 0..u.num_actions_of(agent) {
            let rec_mass = u
                .joint_actions()
                .filter(|&a| u.agent_action(a, agent) == action)
                .flat_map(|a| (0..signal.num_signals()).map(move |s| (a, s)))
                .fold(Q::zero(), |acc, (a, s)| acc + &masses[s] * x.get(a, s));
            for deviation in (0..u.num_actions_of(agent)).filter(|&d| d != action) {
                out.push(DeviationCheck {
                    agent,
                    action,
                    deviation,
                    gain: conditional_gain(u, signal, x, agent, action, deviation)?,
                    required: delta * &rec_mass,
                });
            }
        }
    }
    Ok(out)
}

fn var(signal_count_stride: usize, a: JointAction, s: usize) -> usize {
    s * signal_count_stride + a.0
}

/// Constraints of `BIC_δ[S]` over the signal-major `x` layout: one deviation
/// row per agent and ordered pair of distinct own actions, then one simplex
/// row per feasible signal.
pub fn bic_polytope(u: &UtilityStructure, signal: &SignalStructure, delta: &Q) -> Vec<Constraint> {
    let na = u.num_joint_actions();
    let nx = signal.num_signals();
    // weight[s][θ] = ψ(θ) ψ̂(s|θ)
    let weight: Vec<Vec<Q>> = (0..nx)
        .map(|s| (0..u.num_states()).map(|k| u.prior(k) * signal.prob(s, k)).collect())
        .collect();
    let mass: Vec<Q> = weight.iter().map(sum).collect();
    let mut rows = Vec::new();
    for agent in 0..u.num_agents() {
        for action in 0..u.num_actions_of(agent) {
            for deviation in (0..u.num_actions_of(agent)).filter(|&d| d != action) {
                let mut coeffs = vec![Q::zero(); na * nx];
                for a in u.joint_actions().filter(|&a| u.agent_action(a, agent) == action) {
                    let dev = u.with_agent_action(a, agent, deviation);
                    for s in 0..nx {
                        let mut c = Q::zero();
                        for (k, w) in weight[s].iter().enumerate() {
                            if !w.is_zero() {
                                c += w * (u.utility(agent, a, k) - u.utility(agent, dev, k));
                            }
                        }
                        if !delta.is_zero() {
                            c -= delta * &mass[s];
                        }
                        coeffs[var(na, a, s)] = c;
                    }
                }
                rows.push(Constraint::new(coeffs, Relation::Ge, Q::zero()));
            }
        }
    }
    for s in 0..nx {
        let mut coeffs = vec![Q::zero(); na * nx];
        for a in u.joint_actions() {
            coeffs[var(na, a, s)] = Q::one();
        }
        rows.push(Constraint::new(coeffs, Relation::Eq, Q::one()));
    }
    rows
}

fn prepare_region(u: &UtilityStructure, signal: &SignalStructure, delta: &Q) -> Result<FeasibleRegion> {
    if delta.is_negative() {
        return Err(Error::Parameter("δ must be nonnegative".into()));
    }
    let n = u.num_joint_actions() * signal.num_signals();
    FeasibleRegion::new(n, &bic_polytope(u, signal, delta), &vec![None; n])
        .ok_or_else(|| Error::DeltaInfeasible { delta: delta.clone() })
}

/// Reward-maximizing policy over `BIC_δ[S]` and its value (`REW*[S]` at δ = 0).
pub fn optimal_policy(u: &UtilityStructure, signal: &SignalStructure, delta: &Q) -> Result<(PolicyTable, Q)> {
    let region = prepare_region(u, signal, delta)?;
    let na = u.num_joint_actions();
    let mut c = vec![Q::zero(); na * signal.num_signals()];
    for s in 0..signal.num_signals() {
        for a in u.joint_actions() {
            c[var(na, a, s)] = (0..u.num_states())
                .fold(Q::zero(), |acc, k| acc + u.prior(k) * signal.prob(s, k) * u.reward(a, k));
        }
    }
    let sol = region.maximize(&c);
    debug_assert_eq!(sol.status, LpStatus::Optimal);
    Ok((PolicyTable::from_lp_vector(&sol.x, signal.num_signals(), na), sol.objective_value))
}

/// Signal-explorable sets: `a ∈ EX_s` iff `max_{x ∈ BIC_δ[S]} x[a,s] > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorableSets {
    /// `sets[s]`
    pub sets: Vec<BTreeSet<JointAction>>,
    /// `eta[s][a] = max_{x ∈ BIC_δ[S]} x[a,s]`
    pub eta: Vec<Vec<Q>>,
    /// Minimum of `eta` over included pairs; equals `p_min[S]`.
    pub pmin_bracket: Q,
    /// Maximizer `x^{a,s}` for every included pair.
    pub solutions: Vec<Vec<Option<PolicyTable>>>,
}

impl ExplorableSets {
    /// `θ → EX_{S(θ)}` for a state-determined structure.
    pub fn at_state(&self, signal: &SignalStructure, state: usize) -> Option<&BTreeSet<JointAction>> {
        signal.signal_at(state).map(|s| &self.sets[s])
    }
}

pub fn explorable_set(u: &UtilityStructure, signal: &SignalStructure, delta: &Q) -> Result<ExplorableSets> {
    let region = prepare_region(u, signal, delta)?;
    let na = u.num_joint_actions();
    let nx = signal.num_signals();
    let pairs: Vec<(usize, usize)> = (0..nx).flat_map(|s| (0..na).map(move |a| (s, a))).collect();
    let solved: Vec<(Q, Option<PolicyTable>)> = pairs
        .par_iter()
        .map(|&(s, a)| {
            let mut c = vec![Q::zero(); na * nx];
            c[var(na, JointAction(a), s)] = Q::one();
            let sol = region.maximize(&c);
            debug_assert_eq!(sol.status, LpStatus::Optimal);
            let table = sol
                .objective_value
                .is_positive()
                .then(|| PolicyTable::from_lp_vector(&sol.x, nx, na));
            (sol.objective_value, table)
        })
        .collect();

    let mut sets = vec![BTreeSet::new(); nx];
    let mut eta = vec![vec![Q::zero(); na]; nx];
    let mut solutions = vec![vec![None; na]; nx];
    for (&(s, a), (value, table)) in pairs.iter().zip(solved) {
        if value.is_positive() {
            sets[s].insert(JointAction(a));
        }
        eta[s][a] = value;
        solutions[s][a] = table;
    }
    let pmin_bracket = eta
        .iter()
        .flatten()
        .filter(|v| v.is_positive())
        .min()
        .cloned()
        .unwrap_or_else(Q::zero);
    Ok(ExplorableSets { sets, eta, pmin_bracket, solutions })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxSupportPolicy {
    pub table: PolicyTable,
    /// Smallest positive entry of `table`.
    pub pmin_value: Q,
    pub explorable: ExplorableSets,
}

impl MaxSupportPolicy {
    /// Largest `|EX_s|` over feasible signals.
    pub fn max_support_size(&self) -> usize {
        self.explorable.sets.iter().map(BTreeSet::len).max().unwrap_or(0)
    }
}

/// Uniform mixture of the explorability maximizers:
/// `x = 1/|X| Σ_s 1/|EX_s| Σ_{a ∈ EX_s} x^{a,s}`.
pub fn max_support_policy(u: &UtilityStructure, signal: &SignalStructure, delta: &Q) -> Result<MaxSupportPolicy> {
    let explorable = explorable_set(u, signal, delta)?;
    let nx = signal.num_signals();
    let mut parts: Vec<(Q, &PolicyTable)> = Vec::new();
    for s in 0..nx {
        let k = explorable.sets[s].len();
        assert!(k > 0, "a BIC policy recommends something at every feasible signal");
        let w = Q::one() / qi((nx * k) as i64);
        for a in &explorable.sets[s] {
            parts.push((w.clone(), explorable.solutions[s][a.0].as_ref().expect("solution for explorable pair")));
        }
    }
    let table = PolicyTable::mix(&parts)?;
    let pmin_value = table.pmin().expect("nonempty support");
    let bound = &explorable.pmin_bracket / qi((u.num_joint_actions() * nx) as i64);
    assert!(pmin_value >= bound, "max-support p_min fell below p_min[S]/(|A||X|)");
    for s in 0..nx {
        debug_assert_eq!(table.support(s), explorable.sets[s]);
    }
    Ok(MaxSupportPolicy { table, pmin_value, explorable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::rational::q;
    use crate::signal::{all_info, empty_signal};

    fn set(items: &[usize]) -> BTreeSet<JointAction> {
        items.iter().map(|&a| JointAction(a)).collect()
    }

    #[test]
    fn polytope_row_counts() {
        let u = instances::two_arm();
        let rows = bic_polytope(&u, &empty_signal(&u), &Q::zero());
        assert_eq!(rows.len(), 2 + 1);
        assert_eq!(rows[0].coeffs.len(), 2);

        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let g = instances::random_instance(
            &mut rng,
            &instances::RandomParams { agents: 2, max_actions: 3, max_states: 3, grid: 8 },
        );
        let s = all_info(&g, &vec![set(&[0]); g.num_states()]).unwrap();
        let expected: usize = (0..2).map(|i| g.num_actions_of(i) * (g.num_actions_of(i) - 1)).sum();
        assert_eq!(bic_polytope(&g, &s, &Q::zero()).len(), expected + s.num_signals());
    }

    #[test]
    fn constant_game_rows_hold_at_zero() {
        let u = instances::constant_utility(q(1, 2));
        let s = empty_signal(&u);
        let x = PolicyTable::point_mass(1, u.num_joint_actions(), JointAction(1));
        for c in deviation_checks(&u, &s, &x, &Q::zero()).unwrap() {
            assert!(c.margin().is_zero());
        }
    }

    #[test]
    fn optimal_reward_on_empty_signal() {
        let u = instances::two_arm();
        let (x, value) = optimal_policy(&u, &empty_signal(&u), &Q::zero()).unwrap();
        assert_eq!(value, q(3, 4));
        assert_eq!(x.column(0), &[Q::one(), Q::zero()]);
    }

    #[test]
    fn optimal_reward_with_explorable_information() {
        // Brute force over the 3 signal values: best BIC action per value.
        let u = instances::two_arm();
        let bmap = vec![set(&[0, 1]), set(&[0, 1]), set(&[0]), set(&[0])];
        let s = all_info(&u, &bmap).unwrap();
        assert_eq!(s.num_signals(), 3);
        let (x, value) = optimal_policy(&u, &s, &Q::zero()).unwrap();
        assert_eq!(value, q(7, 8));
        assert_eq!(x.expected_reward(&u, &s), q(7, 8));
    }

    #[test]
    fn constant_reward_gives_constant_value() {
        let u = instances::constant_utility(q(3, 8));
        for s in [empty_signal(&u), all_info(&u, &vec![set(&[0, 1]); u.num_states()]).unwrap()] {
            assert_eq!(optimal_policy(&u, &s, &Q::zero()).unwrap().1, q(3, 8));
        }
    }

    #[test]
    fn explorable_sets_match_hand_analysis() {
        let u = instances::two_arm();
        let ex = explorable_set(&u, &empty_signal(&u), &Q::zero()).unwrap();
        assert_eq!(ex.sets[0], set(&[0]));
        assert!(ex.eta[0][1].is_zero());
        assert_eq!(ex.pmin_bracket, Q::one());

        let s = all_info(&u, &vec![set(&[0]); 4]).unwrap();
        let ex = explorable_set(&u, &s, &Q::zero()).unwrap();
        assert_eq!(ex.at_state(&s, 0).unwrap(), &set(&[0, 1]));
        assert_eq!(ex.at_state(&s, 2).unwrap(), &set(&[0]));
    }

    #[test]
    fn dominant_action_is_always_explorable() {
        let u = instances::dominant_action();
        let s = all_info(&u, &vec![set(&[0]); u.num_states()]).unwrap();
        let ex = explorable_set(&u, &s, &Q::zero()).unwrap();
        for set in &ex.sets {
            assert!(set.contains(&JointAction(0)));
        }
    }

    #[test]
    fn max_support_on_empty_signal_is_point_mass() {
        let u = instances::two_arm();
        let m = max_support_policy(&u, &empty_signal(&u), &Q::zero()).unwrap();
        assert_eq!(m.table.column(0), &[Q::one(), Q::zero()]);
        assert_eq!(m.pmin_value, Q::one());
    }

    #[test]
    fn max_support_mixes_two_point_masses() {
        // Constant utilities: every point mass is BIC, so EX = A and each
        // explorability maximizer is a point mass.
        let u = instances::constant_utility(q(1, 2));
        let m = max_support_policy(&u, &empty_signal(&u), &Q::zero()).unwrap();
        assert_eq!(m.table.column(0), &[q(1, 2), q(1, 2)]);
        assert_eq!(m.pmin_value, q(1, 2));
    }

    #[test]
    fn support_equals_explorable_sets_and_stays_in_polytope() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(17);
        for _ in 0..15 {
            let u = instances::random_instance(&mut rng, &instances::RandomParams::default());
            let s = all_info(&u, &vec![set(&[0]); u.num_states()]).unwrap();
            let m = max_support_policy(&u, &s, &Q::zero()).unwrap();
            for k in 0..s.num_signals() {
                assert_eq!(m.table.support(k), m.explorable.sets[k]);
            }
            assert!(deviation_checks(&u, &s, &m.table, &Q::zero()).unwrap().iter().all(DeviationCheck::holds));
            let (opt, _) = optimal_policy(&u, &s, &Q::zero()).unwrap();
            assert!(deviation_checks(&u, &s, &opt, &Q::zero()).unwrap().iter().all(DeviationCheck::holds));
        }
    }

    #[test]
    fn delta_infeasibility_is_reported() {
        let u = instances::two_arm();
        let err = explorable_set(&u, &empty_signal(&u), &q(1, 2)).unwrap_err();
        assert!(matches!(err, Error::DeltaInfeasible { .. }));
        assert!(matches!(optimal_policy(&u, &empty_signal(&u), &q(1, 2)), Err(Error::DeltaInfeasible { .. })));
    }

    #[test]
    fn positive_delta_blocks_zero_slack_exploration() {
        // Recommending a2 when R1 = 1/2 has zero expected gain, so it is
        // explorable at δ = 0 but not for any δ > 0.
        let u = instances::two_arm();
        let s = all_info(&u, &vec![set(&[0]); 4]).unwrap();
        let ex = explorable_set(&u, &s, &q(1, 8)).unwrap();
        assert_eq!(ex.at_state(&s, 0).unwrap(), &set(&[0]));
        assert_eq!(ex.at_state(&s, 2).unwrap(), &set(&[0]));
    }

    #[test]
    fn mixture_of_bic_tables_is_bic() {
        let u = instances::two_arm();
        let s = all_info(&u, &vec![set(&[0]); 4]).unwrap();
        let m = max_support_policy(&u, &s, &Q::zero()).unwrap();
        let (opt, _) = optimal_policy(&u, &s, &Q::zero()).unwrap();
        let mixed = PolicyTable::mix(&[(q(1, 3), &m.table), (q(2, 3), &opt)]).unwrap();
        assert!(deviation_checks(&u, &s, &mixed, &Q::zero()).unwrap().iter().all(DeviationCheck::holds));
    }
}
