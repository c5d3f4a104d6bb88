//! Exploration with deterministic utilities: phases with dedicated rounds,
//! the phased maximal-exploration schedule and its offline fixed point.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::RngCore;

use super::{RunContext, Subroutine, Verdict};
use crate::audit::audit_bic;
use crate::error::{Error, Result};
use crate::game::{JointAction, UtilityStructure};
use crate::policy::{explorable_set, max_support_policy, MaxSupportPolicy};
use crate::rational::{ceil_usize, qi, to_f64, Q};
use crate::signal::{all_info, empty_signal, AllInfoValue, SignalStructure, SignalValue};

/// One phase of `T` rounds simulating a recommendation column exactly:
/// every explored action gets one dedicated round, the other rounds draw
/// from the remainder distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePlan {
    explored: Vec<JointAction>,
    probs: Vec<Q>,
    duration: usize,
    remainder: Vec<Q>,
}

impl PhasePlan {
    /// Uses the shortest admissible duration, `max(1 + |B|, ⌈1/p_min⌉)`.
    pub fn from_column(column: &[Q]) -> Result<Self> {
        let pmin = column
            .iter()
            .filter(|p| p.is_positive())
            .min()
            .ok_or_else(|| Error::Parameter("column has empty support".into()))?;
        let support = column.iter().filter(|p| p.is_positive()).count();
        let duration = (1 + support).max(ceil_usize(&(Q::one() / pmin)));
        Self::with_duration(column, duration)
    }

    /// Requires `T ≥ 1 + |B|` and `x[a] ≥ 1/T` on the support.
    pub fn with_duration(column: &[Q], duration: usize) -> Result<Self> {
        let (explored, probs): (Vec<JointAction>, Vec<Q>) = column
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(a, p)| (JointAction(a), p.clone()))
            .unzip();
        if explored.is_empty() {
            return Err(Error::Parameter("column has empty support".into()));
        }
        if duration < explored.len() + 1 {
            return Err(Error::Parameter(format!("phase of {duration} rounds cannot host {} dedicated rounds", explored.len())));
        }
        let t = qi(duration as i64);
        let per_round = Q::one() / &t;
        if probs.iter().any(|p| *p < per_round) {
            return Err(Error::Parameter(format!("phase of {duration} rounds is shorter than 1/p_min")));
        }
        let spare = qi((duration - explored.len()) as i64);
        let remainder = probs.iter().map(|p| &t * (p - &per_round) / &spare).collect();
        Ok(PhasePlan { explored, probs, duration, remainder })
    }

    pub fn explored(&self) -> &[JointAction] {
        &self.explored
    }

    pub fn duration(&self) -> usize {
        self.duration
    }

    pub fn remainder(&self) -> &[Q] {
        &self.remainder
    }

    /// Probability that any fixed round plays `explored[k]`.
    pub fn marginal(&self, k: usize) -> Q {
        let t = qi(self.duration as i64);
        let spare = qi((self.duration - self.explored.len()) as i64);
        Q::one() / &t + spare / t * &self.remainder[k]
    }

    pub fn target(&self, k: usize) -> &Q {
        &self.probs[k]
    }

    /// Draws a uniformly random injective round assignment for the explored
    /// actions and fills the remaining rounds from the remainder distribution.
    pub fn sample_schedule(&self, rng: &mut dyn RngCore) -> Vec<JointAction> {
        let dedicated = index::sample(rng, self.duration, self.explored.len());
        let mut schedule: Vec<Option<JointAction>> = vec![None; self.duration];
        for (k, round) in dedicated.iter().enumerate() {
            schedule[round] = Some(self.explored[k]);
        }
        let weights: Vec<f64> = self.remainder.iter().map(to_f64).collect();
        let draw = WeightedIndex::new(&weights).ok();
        schedule
            .into_iter()
            .map(|slot| {
                slot.unwrap_or_else(|| match &draw {
                    Some(d) => self.explored[d.sample(rng)],
                    None => self.explored[0],
                })
            })
            .collect()
    }
}

/// `max(1 + max_s |EX_s|, ⌈1/p_min⌉)`: long enough for the realized column
/// at every signal, so the duration does not reveal the signal.
pub fn phase_duration(policy: &MaxSupportPolicy) -> usize {
    (1 + policy.max_support_size()).max(ceil_usize(&(Q::one() / &policy.pmin_value)))
}

/// `θ → support of the column at S(θ)`; zero-prior states keep `∅`.
pub(crate) fn next_explored_map(
    u: &UtilityStructure,
    input: &SignalStructure,
    policy: &MaxSupportPolicy,
) -> Result<Vec<BTreeSet<JointAction>>> {
    if !input.is_deterministic() {
        return Err(Error::Parameter("phase input must be a function of the state".into()));
    }
    Ok((0..u.num_states())
        .map(|k| input.signal_at(k).map(|s| policy.table.support(s)).unwrap_or_default())
        .collect())
}

/// One maximal-exploration phase over a state-determined input structure.
#[derive(Clone, Debug)]
pub struct MaxExPhase {
    label: String,
    input: SignalStructure,
    policy: MaxSupportPolicy,
    duration: usize,
    output: SignalStructure,
    explored_map: Vec<BTreeSet<JointAction>>,
    audit: Verdict,
}

impl MaxExPhase {
    pub fn new(u: &UtilityStructure, input: SignalStructure, delta: &Q, label: impl Into<String>) -> Result<Self> {
        let policy = max_support_policy(u, &input, delta)?;
        let explored_map = next_explored_map(u, &input, &policy)?;
        let output = all_info(u, &explored_map)?;
        let duration = phase_duration(&policy);
        let audit = audit_bic(u, &input, &policy.table, delta)?.verdict(u);
        Ok(MaxExPhase { label: label.into(), input, policy, duration, output, explored_map, audit })
    }

    fn relabeled(&self, label: String) -> Self {
        MaxExPhase { label, ..self.clone() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn policy(&self) -> &MaxSupportPolicy {
        &self.policy
    }

    pub fn audit(&self) -> &Verdict {
        &self.audit
    }

    /// `θ → EX_{S(θ)}`.
    pub fn explored_map(&self) -> &[BTreeSet<JointAction>] {
        &self.explored_map
    }

    pub fn plan_at(&self, input: &SignalValue) -> Result<(usize, PhasePlan)> {
        let s = self.input.index_of(input).ok_or(Error::SignalOutsideSupport)?;
        Ok((s, PhasePlan::with_duration(self.policy.table.column(s), self.duration)?))
    }

    /// Plays one full phase and returns every observation in round order.
    pub(crate) fn play_phase(
        &self,
        input: &SignalValue,
        ctx: &mut RunContext<'_>,
    ) -> Result<Vec<(JointAction, Vec<Q>)>> {
        let (s, plan) = self.plan_at(input)?;
        let column = self.policy.table.column(s);
        let schedule = plan.sample_schedule(ctx.rng);
        Ok(schedule
            .into_iter()
            .map(|a| (a, ctx.play(&self.label, input, column, a, &self.audit)))
            .collect())
    }
}

impl Subroutine for MaxExPhase {
    fn duration(&self) -> usize {
        self.duration
    }
    fn input_structure(&self) -> &SignalStructure {
        &self.input
    }
    fn output_structure(&self) -> &SignalStructure {
        &self.output
    }
    fn run(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        let observed = self.play_phase(input, ctx)?;
        let value = SignalValue::AllInfo(AllInfoValue::new(observed));
        if self.output.index_of(&value).is_none() {
            return Err(Error::SignalOutsideSupport);
        }
        Ok(value)
    }
}

/// Runs one maximal-exploration phase on the realized signal `input`.
pub fn max_ex(
    u: &UtilityStructure,
    structure: &SignalStructure,
    input: &SignalValue,
    ctx: &mut RunContext<'_>,
) -> Result<SignalValue> {
    MaxExPhase::new(u, structure.clone(), &Q::zero(), "maxex")?.run(input, ctx)
}

/// Maximal-exploration phases starting from the empty signal: at least `|A|`
/// of them, and more if the explored-set map is still growing after `|A|`.
/// A state's set can grow again after stalling, because pooling with other
/// states' signals changes what is explorable, so `|A|` alone is not enough.
/// The count depends only on the game.
#[derive(Clone, Debug)]
pub struct IndMaxPlan {
    phases: Vec<MaxExPhase>,
}

impl IndMaxPlan {
    /// The δ-strengthened variant uses δ-max-support policies in every phase.
    pub fn new(u: &UtilityStructure, delta: &Q) -> Result<Self> {
        let min_phases = u.num_joint_actions();
        let max_phases = u.num_joint_actions() * u.num_states() + 1;
        let mut phases: Vec<MaxExPhase> = Vec::new();
        let mut structure = empty_signal(u);
        for l in 1..=max_phases {
            let label = format!("phase{l}");
            let phase = match phases.last() {
                Some(prev) if prev.input == structure => prev.relabeled(label),
                _ => MaxExPhase::new(u, structure, delta, label)?,
            };
            let stable = phase.output == phase.input;
            if stable && phases.len() >= min_phases {
                break;
            }
            structure = phase.output.clone();
            phases.push(phase);
        }
        Ok(IndMaxPlan { phases })
    }

    /// Phases that are needed before the explored-set map stops growing.
    pub fn growth_phases(&self) -> usize {
        self.phases.iter().take_while(|p| p.output != p.input).count()
    }

    pub fn phases(&self) -> &[MaxExPhase] {
        &self.phases
    }

    pub fn final_structure(&self) -> &SignalStructure {
        &self.phases.last().expect("at least one phase").output
    }

    /// `B_1 = ∅, B_2, …, B_{|A|+1}` at `state`.
    pub fn explored_chain(&self, state: usize) -> Vec<BTreeSet<JointAction>> {
        std::iter::once(BTreeSet::new())
            .chain(self.phases.iter().map(|p| p.explored_map[state].clone()))
            .collect()
    }

    /// `θ → B_{|A|+1}(θ)`.
    pub fn final_map(&self) -> &[BTreeSet<JointAction>] {
        &self.phases.last().expect("at least one phase").explored_map
    }
}

impl Subroutine for IndMaxPlan {
    fn duration(&self) -> usize {
        self.phases.iter().map(|p| p.duration).sum()
    }
    fn input_structure(&self) -> &SignalStructure {
        &self.phases[0].input
    }
    fn output_structure(&self) -> &SignalStructure {
        self.final_structure()
    }
    fn run(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        let mut signal = input.clone();
        for phase in &self.phases {
            signal = phase.run(&signal, ctx)?;
        }
        Ok(signal)
    }
}

/// Runs the full phased exploration from the empty signal and returns the
/// final signal together with the plan that produced it.
pub fn ind_max(u: &UtilityStructure, ctx: &mut RunContext<'_>) -> Result<(SignalValue, IndMaxPlan)> {
    let plan = IndMaxPlan::new(u, &Q::zero())?;
    let out = plan.run(&SignalValue::Empty, ctx)?;
    Ok((out, plan))
}

/// Offline fixed point `B ← EX[AllInfo(B)]` from `B ≡ ∅`, computed for all
/// states at once without any interaction.
pub fn oracle_explorable_map(u: &UtilityStructure, delta: &Q) -> Result<Vec<BTreeSet<JointAction>>> {
    let mut map: Vec<BTreeSet<JointAction>> = vec![BTreeSet::new(); u.num_states()];
    for _ in 0..=u.num_joint_actions() * u.num_states() {
        let structure = all_info(u, &map)?;
        let ex = explorable_set(u, &structure, delta)?;
        let next: Vec<BTreeSet<JointAction>> = (0..u.num_states())
            .map(|k| ex.at_state(&structure, k).cloned().unwrap_or_else(|| map[k].clone()))
            .collect();
        if next == map {
            return Ok(map);
        }
        map = next;
    }
    unreachable!("the explored-set map grows at most |A|·|Θ| times")
}

/// Eventually-explorable joint actions at `state`.
pub fn oracle_eventually_explorable(u: &UtilityStructure, state: usize) -> BTreeSet<JointAction> {
    oracle_explorable_map(u, &Q::zero()).expect("the unstrengthened polytope is never empty")[state].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::{compose, Exploit, Identity, SimulatedEnvironment};
    use crate::game::NoiseModel;
    use crate::instances;
    use crate::policy::optimal_policy;
    use crate::rational::q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(items: &[usize]) -> BTreeSet<JointAction> {
        items.iter().map(|&a| JointAction(a)).collect()
    }

    fn env(u: &UtilityStructure, state: usize, seed: u64) -> SimulatedEnvironment<'_> {
        SimulatedEnvironment::new(u, state, NoiseModel::Deterministic, ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn phase_plan_examples() {
        let p = PhasePlan::from_column(&[q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(p.duration(), 3);
        assert_eq!(p.remainder(), &[q(1, 2), q(1, 2)]);
        assert_eq!(p.marginal(0), q(1, 2));

        let p = PhasePlan::from_column(&[Q::one()]).unwrap();
        assert_eq!(p.duration(), 2);
        assert_eq!(p.remainder(), &[Q::one()]);
        assert_eq!(p.marginal(0), Q::one());

        let p = PhasePlan::from_column(&[q(3, 4), q(1, 4)]).unwrap();
        assert_eq!(p.duration(), 4);
        assert_eq!(p.remainder(), &[Q::one(), Q::zero()]);
        assert_eq!(p.marginal(0), q(3, 4));
        assert_eq!(p.marginal(1), q(1, 4));
    }

    #[test]
    fn phase_plan_rejects_degenerate_columns() {
        assert!(PhasePlan::from_column(&[Q::zero(), Q::zero()]).is_err());
        assert!(PhasePlan::with_duration(&[q(1, 2), q(1, 2)], 2).is_err());
        assert!(PhasePlan::with_duration(&[q(3, 4), q(1, 4)], 3).is_err());
    }

    #[test]
    fn remainder_sums_to_one_and_marginals_match() {
        let cols = [
            vec![q(1, 3), q(1, 3), q(1, 3)],
            vec![q(1, 6), q(1, 2), q(1, 3)],
            vec![q(1, 10), Q::zero(), q(9, 10)],
        ];
        for col in &cols {
            for extra in 0..3 {
                let base = PhasePlan::from_column(col).unwrap();
                let p = PhasePlan::with_duration(col, base.duration() + extra).unwrap();
                assert_eq!(p.remainder().iter().fold(Q::zero(), |a, b| a + b), Q::one());
                for k in 0..p.explored().len() {
                    assert_eq!(&p.marginal(k), p.target(k));
                }
            }
        }
    }

    #[test]
    fn schedule_covers_every_explored_action() {
        let p = PhasePlan::from_column(&[q(1, 6), q(1, 2), q(1, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let s = p.sample_schedule(&mut rng);
            assert_eq!(s.len(), p.duration());
            for a in p.explored() {
                assert!(s.contains(a));
            }
        }
    }

    #[test]
    fn max_ex_on_empty_signal_explores_first_arm() {
        let u = instances::two_arm();
        for state in 0..4 {
            let mut e = env(&u, state, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut ctx = RunContext::new(&u, &mut e, &mut rng);
            let out = max_ex(&u, &empty_signal(&u), &SignalValue::Empty, &mut ctx).unwrap();
            assert_eq!(out.explored_set(), set(&[0]));
            let SignalValue::AllInfo(v) = &out else { panic!() };
            assert_eq!(v.block()[0], u.outcome(JointAction(0), state));
            assert!(ctx.log.iter().all(|r| r.action == "a1"));
        }
    }

    #[test]
    fn dominant_action_is_played_every_round() {
        let u = instances::dominant_action();
        let mut e = env(&u, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ctx = RunContext::new(&u, &mut e, &mut rng);
        max_ex(&u, &empty_signal(&u), &SignalValue::Empty, &mut ctx).unwrap();
        assert!(!ctx.log.is_empty());
        assert!(ctx.log.iter().all(|r| r.action == "(x,x)"));
    }

    #[test]
    fn ind_max_on_two_arm_example() {
        // Phase 2 reveals R2 only when R1 = 1/2. Phase 3 then pools R1 = 1
        // with (1/2, 1): recommending a2 with probability 1/2 at R1 = 1 leaves
        // its follower indifferent, so a2 is explored in every state.
        let u = instances::two_arm();
        for state in 0..4 {
            let mut e = env(&u, state, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut ctx = RunContext::new(&u, &mut e, &mut rng);
            let (out, plan) = ind_max(&u, &mut ctx).unwrap();
            assert_eq!(out.explored_set(), set(&[0, 1]));
            assert_eq!(plan.phases().len(), 3);
            assert_eq!(plan.growth_phases(), 3);
            let chain = plan.explored_chain(state);
            assert_eq!(chain[1], set(&[0]));
            assert_eq!(chain[2], if state < 2 { set(&[0, 1]) } else { set(&[0]) });
            assert_eq!(chain[3], set(&[0, 1]));
            assert_eq!(ctx.log.len(), plan.duration());
        }
    }

    #[test]
    fn oracle_matches_hand_iteration() {
        let u = instances::two_arm();
        assert_eq!(oracle_eventually_explorable(&u, 1), set(&[0, 1]));
        assert_eq!(oracle_eventually_explorable(&u, 3), set(&[0, 1]));
        let d = instances::dominant_action();
        for k in 0..d.num_states() {
            assert_eq!(oracle_eventually_explorable(&d, k), set(&[0]));
        }
    }

    #[test]
    fn durations_bounded_by_support_over_pmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let u = instances::random_instance(&mut rng, &instances::RandomParams::default());
            let plan = IndMaxPlan::new(&u, &Q::zero()).unwrap();
            for p in plan.phases() {
                let nx = p.input.num_signals();
                let bound = ceil_usize(&(qi((u.num_joint_actions() * nx) as i64) / &p.policy.explorable.pmin_bracket));
                assert!(p.duration <= bound.max(1 + u.num_joint_actions()));
            }
        }
    }

    #[test]
    fn composition_with_identity_and_durations() {
        let u = instances::two_arm();
        let phase = MaxExPhase::new(&u, empty_signal(&u), &Q::zero(), "p").unwrap();
        let out = phase.output_structure().clone();
        let d = phase.duration();
        let c = compose(phase.clone(), Identity::new(out.clone())).unwrap();
        assert_eq!(c.duration(), d);
        assert_eq!(c.output_structure(), &out);

        let (table, _) = optimal_policy(&u, &out, &Q::zero()).unwrap();
        let verdict = audit_bic(&u, &out, &table, &Q::zero()).unwrap().verdict(&u);
        let three = Exploit::new(out.clone(), table.clone(), 3, verdict.clone());
        let four = Exploit::new(out.clone(), table, 4, verdict);
        assert_eq!(compose(three, four).unwrap().duration(), 7);

        assert!(matches!(compose(Identity::new(out), phase), Err(Error::InvalidSequel(_))));
    }

    #[test]
    fn composed_run_equals_manual_two_stage_run() {
        let u = instances::constant_utility(q(1, 2));
        let phase = MaxExPhase::new(&u, empty_signal(&u), &Q::zero(), "explore").unwrap();
        let out = phase.output_structure().clone();
        let (table, _) = optimal_policy(&u, &out, &Q::zero()).unwrap();
        let verdict = audit_bic(&u, &out, &table, &Q::zero()).unwrap().verdict(&u);
        let exploit = Exploit::new(out, table, 5, verdict);

        let mut e1 = env(&u, 0, 8);
        let mut r1 = ChaCha8Rng::seed_from_u64(8);
        let mut ctx1 = RunContext::new(&u, &mut e1, &mut r1);
        let mid = phase.run(&SignalValue::Empty, &mut ctx1).unwrap();
        let end1 = exploit.run(&mid, &mut ctx1).unwrap();
        let manual = ctx1.log;

        let composed = compose(phase, exploit).unwrap();
        let mut e2 = env(&u, 0, 8);
        let mut r2 = ChaCha8Rng::seed_from_u64(8);
        let mut ctx2 = RunContext::new(&u, &mut e2, &mut r2);
        let end2 = composed.run(&SignalValue::Empty, &mut ctx2).unwrap();
        assert_eq!(end1, end2);
        assert_eq!(manual, ctx2.log);
        assert_eq!(end2.explored_set(), set(&[0, 1]));
    }

    #[test]
    fn composition_is_associative() {
        let u = instances::two_arm();
        let plan = IndMaxPlan::new(&u, &Q::zero()).unwrap();
        let [a, b] = [plan.phases()[0].clone(), plan.phases()[1].clone()];
        let s = b.output_structure().clone();
        let c = Identity::new(s);
        let left = compose(compose(a.clone(), b.clone()).unwrap(), c.clone()).unwrap();
        let right = compose(a, compose(b, c).unwrap()).unwrap();
        assert_eq!(left.duration(), right.duration());
        let run = |sub: &dyn Subroutine| {
            let mut e = env(&u, 1, 5);
            let mut r = ChaCha8Rng::seed_from_u64(5);
            let mut ctx = RunContext::new(&u, &mut e, &mut r);
            let out = sub.run(&SignalValue::Empty, &mut ctx).unwrap();
            (out, ctx.log)
        };
        assert_eq!(run(&left), run(&right));
    }
}
