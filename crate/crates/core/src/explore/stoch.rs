//! Exploration with stochastic utilities: repeated phases collect samples,
//! and DeNoise snaps sample means to the best-fitting state.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};

use super::det::{IndMaxPlan, MaxExPhase};
use super::{RunContext, Subroutine};
use crate::error::{Error, Result};
use crate::game::{separation_parameter, JointAction, UtilityStructure};
use crate::policy::{optimal_policy, PolicyTable};
use crate::rational::{fmt_q, qi, to_f64, Q};
use crate::signal::{AllInfoValue, SignalStructure, SignalValue};

/// `⌈ζ⁻² ln(2 n |B| / β)⌉`, at least 1.
pub fn required_samples(zeta: &Q, agents: usize, explored: usize, beta: f64) -> Result<usize> {
    if !zeta.is_positive() {
        return Err(Error::NoSeparation);
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("confidence β = {beta} must lie in (0, 1)")));
    }
    let z = to_f64(zeta);
    let raw = (2.0 * agents as f64 * explored as f64 / beta).ln() / (z * z);
    // absorb rounding in ln so exact integers do not round up
    Ok(((raw - 1e-9).ceil() as usize).max(1))
}

/// Realized outcome vectors per explored joint action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DSample {
    explored: Vec<JointAction>,
    draws: Vec<Vec<Vec<Q>>>,
}

impl DSample {
    pub fn new(explored: &BTreeSet<JointAction>) -> Self {
        DSample { explored: explored.iter().copied().collect(), draws: vec![Vec::new(); explored.len()] }
    }

    pub fn explored(&self) -> &[JointAction] {
        &self.explored
    }

    pub fn push(&mut self, a: JointAction, outcome: Vec<Q>) -> Result<()> {
        let k = self
            .explored
            .binary_search(&a)
            .map_err(|_| Error::Parameter(format!("action {} is not in the sampled set", a.0)))?;
        self.draws[k].push(outcome);
        Ok(())
    }

    pub fn count(&self, a: JointAction) -> usize {
        self.explored.binary_search(&a).map_or(0, |k| self.draws[k].len())
    }

    /// Fewest samples held for any explored action.
    pub fn min_count(&self) -> usize {
        self.draws.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Coordinatewise sample means, one vector per explored action.
    pub fn means(&self) -> Result<Vec<Vec<Q>>> {
        self.draws
            .iter()
            .map(|rows| {
                let first = rows.first().ok_or_else(|| Error::Parameter("an explored action has no samples".into()))?;
                let n = qi(rows.len() as i64);
                Ok((0..first.len())
                    .map(|c| rows.iter().fold(Q::zero(), |acc, r| acc + &r[c]) / &n)
                    .collect())
            })
            .collect()
    }
}

/// Best-fitting positive-prior state under the sup-norm over all
/// `(n+1)·|B|` coordinates; ties go to the lowest state index.
pub fn denoise(u: &UtilityStructure, sample: &DSample) -> Result<(usize, AllInfoValue)> {
    let all: Vec<usize> = u.positive_prior_states().collect();
    denoise_among(u, sample, &all)
}

pub fn denoise_among(u: &UtilityStructure, sample: &DSample, candidates: &[usize]) -> Result<(usize, AllInfoValue)> {
    if sample.explored.is_empty() {
        return Err(Error::Parameter("cannot denoise an empty explored set".into()));
    }
    let means = sample.means()?;
    let mut best: Option<(Q, usize)> = None;
    for &k in candidates {
        let dist = sample
            .explored
            .iter()
            .zip(&means)
            .flat_map(|(&a, m)| u.outcome(a, k).into_iter().zip(m).map(|(x, y)| (x - y).abs()))
            .max()
            .unwrap_or_else(Q::zero);
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, k));
        }
    }
    let (_, state) = best.ok_or_else(|| Error::Parameter("no candidate states".into()))?;
    let set: BTreeSet<JointAction> = sample.explored.iter().copied().collect();
    Ok((state, AllInfoValue::at_state(u, &set, state)))
}

/// A confidence condition that the incentive guarantee relies on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PremiseCheck {
    pub name: String,
    pub value: Q,
    pub bound: Q,
}

impl PremiseCheck {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

impl fmt::Display for PremiseCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = if self.holds() { "<=" } else { ">" };
        write!(
            f,
            "{}: {} ({:.3e}) {rel} {} ({:.3e})",
            self.name,
            fmt_q(&self.value),
            to_f64(&self.value),
            fmt_q(&self.bound),
            to_f64(&self.bound)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StochRunConfig {
    pub delta: Q,
    pub beta: Q,
    pub beta_prime: Q,
    pub zeta: Q,
}

impl StochRunConfig {
    pub fn new(u: &UtilityStructure, delta: Q, beta: Q) -> Result<Self> {
        if !delta.is_positive() {
            return Err(Error::Parameter("δ must be positive for stochastic utilities".into()));
        }
        if !beta.is_positive() || beta >= qi(1) {
            return Err(Error::Parameter("β must lie in (0, 1)".into()));
        }
        let zeta = separation_parameter(u).gap().cloned().ok_or(Error::NoSeparation)?;
        let beta_prime = &beta / qi(u.num_joint_actions() as i64);
        Ok(StochRunConfig { delta, beta, beta_prime, zeta })
    }

    /// Splits `β` evenly over `phases` phases.
    pub fn split_over(mut self, phases: usize) -> Self {
        self.beta_prime = &self.beta / qi(phases as i64);
        self
    }
}

/// One δ-maximal-exploration phase: `R` back-to-back runs of the underlying
/// phase plan, then DeNoise over the pooled samples.
#[derive(Clone, Debug)]
pub struct MaxExploreDelta {
    phase: MaxExPhase,
    meta_rounds: usize,
    beta_in: Q,
    beta_out: Q,
}

impl MaxExploreDelta {
    pub fn meta_rounds(&self) -> usize {
        self.meta_rounds
    }

    pub fn phase(&self) -> &MaxExPhase {
        &self.phase
    }

    pub fn beta_in(&self) -> &Q {
        &self.beta_in
    }

    pub fn beta_out(&self) -> &Q {
        &self.beta_out
    }

    /// `β_in ≤ δ · p_min · min_s Pr[S=s] / (2|X|)`.
    pub fn premise(&self, u: &UtilityStructure, delta: &Q) -> PremiseCheck {
        let input = self.phase.input_structure();
        let bound = delta * &self.phase.policy().pmin_value * input.min_mass(u) / qi(2 * input.num_signals() as i64);
        PremiseCheck { name: format!("{} input confidence", self.phase.label()), value: self.beta_in.clone(), bound }
    }

    /// Runs the phase and returns the DeNoise output with its sample.
    pub fn run_with_sample(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<(SignalValue, DSample)> {
        let (s, _) = self.phase.plan_at(input)?;
        let explored = self.phase.policy().table.support(s);
        let mut sample = DSample::new(&explored);
        for _ in 0..self.meta_rounds {
            for (a, outcome) in self.phase.play_phase(input, ctx)? {
                sample.push(a, outcome)?;
            }
        }
        // only states whose next explored set is B keep the output in the universe
        let candidates: Vec<usize> = ctx
            .u
            .positive_prior_states()
            .filter(|&k| self.phase.explored_map()[k] == explored)
            .collect();
        let (_, value) = denoise_among(ctx.u, &sample, &candidates)?;
        Ok((SignalValue::AllInfo(value), sample))
    }
}

impl Subroutine for MaxExploreDelta {
    fn duration(&self) -> usize {
        self.meta_rounds * self.phase.duration()
    }
    fn input_structure(&self) -> &SignalStructure {
        self.phase.input_structure()
    }
    fn output_structure(&self) -> &SignalStructure {
        self.phase.output_structure()
    }
    fn run(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        Ok(self.run_with_sample(input, ctx)?.0)
    }
}

/// δ-maximal-exploration phases with the confidence split evenly across them,
/// followed by the δ-optimal table for the final signal structure.
#[derive(Clone, Debug)]
pub struct StochasticPlan {
    config: StochRunConfig,
    phases: Vec<MaxExploreDelta>,
    exploit: PolicyTable,
    benchmark: Q,
}

impl StochasticPlan {
    pub fn new(u: &UtilityStructure, delta: Q, beta: Q) -> Result<Self> {
        let config = StochRunConfig::new(u, delta, beta)?;
        let chain = IndMaxPlan::new(u, &config.delta)?;
        let config = config.split_over(chain.phases().len());
        let beta_f = to_f64(&config.beta_prime);
        let phases = chain
            .phases()
            .iter()
            .enumerate()
            .map(|(l, phase)| {
                let width = phase.policy().max_support_size();
                Ok(MaxExploreDelta {
                    phase: phase.clone(),
                    meta_rounds: required_samples(&config.zeta, u.num_agents(), width, beta_f)?,
                    beta_in: &config.beta_prime * qi(l as i64),
                    beta_out: config.beta_prime.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (exploit, benchmark) = optimal_policy(u, chain.final_structure(), &config.delta)?;
        Ok(StochasticPlan { config, phases, exploit, benchmark })
    }

    pub fn config(&self) -> &StochRunConfig {
        &self.config
    }

    pub fn phases(&self) -> &[MaxExploreDelta] {
        &self.phases
    }

    pub fn final_structure(&self) -> &SignalStructure {
        self.phases.last().expect("at least one phase").output_structure()
    }

    pub fn exploit_table(&self) -> &PolicyTable {
        &self.exploit
    }

    /// δ-optimal reward over the final structure.
    pub fn benchmark(&self) -> &Q {
        &self.benchmark
    }

    pub fn exploration_rounds(&self) -> usize {
        self.phases.iter().map(Subroutine::duration).sum()
    }

    /// Every confidence condition the incentive guarantee needs, in order:
    /// one per phase, the overall `β ≤ δ/(C|Θ|)`, and the exploit table's.
    pub fn premises(&self, u: &UtilityStructure) -> Vec<PremiseCheck> {
        let delta = &self.config.delta;
        let mut out: Vec<PremiseCheck> = self.phases.iter().map(|p| p.premise(u, delta)).collect();
        let c = self
            .phases
            .iter()
            .map(|p| {
                let input = p.input_structure();
                qi(2) / (&p.phase.policy().pmin_value * input.min_mass(u))
            })
            .max()
            .expect("at least one phase");
        out.push(PremiseCheck {
            name: "overall confidence β vs δ/(C|Θ|)".into(),
            value: self.config.beta.clone(),
            bound: delta / (c * qi(u.num_states() as i64)),
        });
        let last = self.final_structure();
        let pmin = self.exploit.pmin().expect("nonempty table");
        out.push(PremiseCheck {
            name: "exploit confidence".into(),
            value: self.config.beta.clone(),
            bound: delta * pmin * last.min_mass(u) / qi(2 * last.num_signals() as i64),
        });
        out
    }

    /// Runs all phases from the empty signal.
    pub fn run(&self, ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        let mut signal = SignalValue::Empty;
        for phase in &self.phases {
            signal = phase.run(&signal, ctx)?;
        }
        Ok(signal)
    }
}

/// Runs δ-maximal exploration at confidence `β` and returns the final
/// approximate signal.
pub fn repeat_max_explore_delta(
    u: &UtilityStructure,
    beta: Q,
    delta: Q,
    ctx: &mut RunContext<'_>,
) -> Result<(SignalValue, StochasticPlan)> {
    let plan = StochasticPlan::new(u, delta, beta)?;
    let out = plan.run(ctx)?;
    Ok((out, plan))
}

/// δ-eventually-explorable joint actions at `state`.
pub fn oracle_delta_explorable(u: &UtilityStructure, state: usize, delta: &Q) -> Result<BTreeSet<JointAction>> {
    Ok(super::det::oracle_explorable_map(u, delta)?.swap_remove(state))
}
