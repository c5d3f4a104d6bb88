//! Episode simulation, benchmarks and regret reports for the two full
//! pipelines: exploration then exploitation, with deterministic or
//! stochastic utilities.

use std::io::Write;

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::det::{oracle_explorable_map, IndMaxPlan};
use crate::explore::stoch::{PremiseCheck, StochasticPlan};
use crate::explore::{Exploit, RoundRecord, RunContext, SimulatedEnvironment, Subroutine, Verdict};
use crate::game::{NoiseModel, UtilityStructure};
use crate::policy::{optimal_policy, PolicyTable};
use crate::rational::{fmt_q, qi, to_f64, Q};
use crate::signal::{all_info, SignalValue};

pub use crate::audit::{audit_bic, AuditReport};

/// Optimal δ-BIC reward given full information on the δ-eventually-explorable
/// joint actions of every state.
pub fn benchmark(u: &UtilityStructure, delta: &Q) -> Result<Q> {
    let map = oracle_explorable_map(u, delta)?;
    Ok(optimal_policy(u, &all_info(u, &map)?, delta)?.1)
}

/// Principal randomness and environment randomness come from separate
/// streams of the one episode seed.
fn episode_rngs(seed: u64, trial: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut principal = ChaCha8Rng::seed_from_u64(seed);
    principal.set_stream(2 * trial);
    let mut world = ChaCha8Rng::seed_from_u64(seed);
    world.set_stream(2 * trial + 1);
    (principal, world)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub pipeline: String,
    pub state: String,
    pub seed: u64,
    pub rounds: usize,
    pub exploration_rounds: usize,
    pub delta: String,
    pub beta: String,
    pub noise: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub header: EpisodeHeader,
    pub final_signal: String,
    pub records: Vec<RoundRecord>,
}

impl EpisodeTrace {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.audit.passed())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    #[serde(rename = "T")]
    pub rounds: usize,
    #[serde(rename = "T0")]
    pub exploration_rounds: usize,
    pub benchmark: String,
    pub expected_reward: String,
    pub regret: String,
    pub delta: String,
    pub beta: String,
    pub seed: u64,
}

pub const REPORT_HEADER: [&str; 8] = ["T", "T0", "benchmark", "expected_reward", "regret", "delta", "beta", "seed"];

/// Writes reports as CSV with the fixed header.
pub fn write_reports<W: Write>(out: W, reports: &[RegretReport]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn pick_state(u: &UtilityStructure, fixed: Option<usize>, rng: &mut ChaCha8Rng) -> Result<usize> {
    match fixed {
        Some(k) if k >= u.num_states() => Err(Error::Parameter(format!("state index {k} out of range"))),
        Some(k) if u.prior(k).is_zero() => Err(Error::ZeroPriorState(k)),
        Some(k) => Ok(k),
        None => Ok(u.sample_state(rng)),
    }
}

/// Phased maximal exploration followed by the optimal policy for the final
/// signal, for deterministic utilities.
#[derive(Clone, Debug)]
pub struct DeterministicPipeline {
    plan: IndMaxPlan,
    exploit: PolicyTable,
    exploit_audit: Verdict,
    benchmark: Q,
    phase_rewards: Vec<Q>,
}

impl DeterministicPipeline {
    pub fn new(u: &UtilityStructure) -> Result<Self> {
        let plan = IndMaxPlan::new(u, &Q::zero())?;
        let oracle = oracle_explorable_map(u, &Q::zero())?;
        assert_eq!(plan.final_map(), oracle.as_slice(), "explored sets differ from the fixed point");
        let last = plan.final_structure();
        let (exploit, benchmark) = optimal_policy(u, last, &Q::zero())?;
        let exploit_audit = audit_bic(u, last, &exploit, &Q::zero())?.verdict(u);
        let phase_rewards = plan
            .phases()
            .iter()
            .map(|p| p.policy().table.expected_reward(u, p.input_structure()))
            .collect();
        Ok(DeterministicPipeline { plan, exploit, exploit_audit, benchmark, phase_rewards })
    }

    pub fn plan(&self) -> &IndMaxPlan {
        &self.plan
    }

    pub fn exploit_table(&self) -> &PolicyTable {
        &self.exploit
    }

    pub fn benchmark(&self) -> &Q {
        &self.benchmark
    }

    pub fn exploration_rounds(&self) -> usize {
        self.plan.duration()
    }

    /// Expected reward of each exploration phase, per round.
    pub fn phase_rewards(&self) -> &[Q] {
        &self.phase_rewards
    }

    fn check_horizon(&self, rounds: usize) -> Result<()> {
        let required = self.exploration_rounds();
        if rounds < required {
            return Err(Error::HorizonTooShort { rounds, required });
        }
        Ok(())
    }

    /// `Σ_ℓ T_ℓ · REW(x_ℓ) + (T − T₀) · REW*`, exact.
    pub fn expected_reward(&self, rounds: usize) -> Result<Q> {
        self.check_horizon(rounds)?;
        let explore = self
            .plan
            .phases()
            .iter()
            .zip(&self.phase_rewards)
            .fold(Q::zero(), |acc, (p, r)| acc + qi(p.duration() as i64) * r);
        Ok(explore + qi((rounds - self.exploration_rounds()) as i64) * &self.benchmark)
    }

    pub fn regret(&self, rounds: usize) -> Result<Q> {
        Ok(qi(rounds as i64) * &self.benchmark - self.expected_reward(rounds)?)
    }

    pub fn report(&self, rounds: usize, seed: u64) -> Result<RegretReport> {
        Ok(RegretReport {
            rounds,
            exploration_rounds: self.exploration_rounds(),
            benchmark: fmt_q(&self.benchmark),
            expected_reward: fmt_q(&self.expected_reward(rounds)?),
            regret: fmt_q(&self.regret(rounds)?),
            delta: "0".into(),
            beta: "0".into(),
            seed,
        })
    }

    /// Simulates one episode; the state is fixed or drawn from the prior.
    pub fn run(&self, u: &UtilityStructure, rounds: usize, state: Option<usize>, seed: u64) -> Result<EpisodeTrace> {
        self.run_trial(u, rounds, state, seed, 0)
    }

    /// Like [`run`](Self::run) on stream `trial` of `seed`.
    pub fn run_trial(
        &self,
        u: &UtilityStructure,
        rounds: usize,
        state: Option<usize>,
        seed: u64,
        trial: u64,
    ) -> Result<EpisodeTrace> {
        self.check_horizon(rounds)?;
        let (mut principal, mut world) = episode_rngs(seed, trial);
        let state = pick_state(u, state, &mut world)?;
        let mut env = SimulatedEnvironment::new(u, state, NoiseModel::Deterministic, world);
        let mut ctx = RunContext::new(u, &mut env, &mut principal);
        let signal = self.plan.run(&SignalValue::Empty, &mut ctx)?;
        let exploit = Exploit::new(
            self.plan.final_structure().clone(),
            self.exploit.clone(),
            rounds - self.exploration_rounds(),
            self.exploit_audit.clone(),
        );
        let end = exploit.run(&signal, &mut ctx)?;
        Ok(EpisodeTrace {
            header: EpisodeHeader {
                pipeline: "deterministic".into(),
                state: u.state_name(state).to_string(),
                seed,
                rounds,
                exploration_rounds: self.exploration_rounds(),
                delta: "0".into(),
                beta: "0".into(),
                noise: NoiseModel::Deterministic.to_string(),
            },
            final_signal: end.to_string(),
            records: ctx.log,
        })
    }
}

/// Builds the pipeline and runs one episode.
pub fn run_deterministic_pipeline(
    u: &UtilityStructure,
    rounds: usize,
    state: Option<usize>,
    seed: u64,
) -> Result<(EpisodeTrace, RegretReport)> {
    let pipeline = DeterministicPipeline::new(u)?;
    Ok((pipeline.run(u, rounds, state, seed)?, pipeline.report(rounds, seed)?))
}

/// δ-maximal exploration at confidence `β = 1/T`, then the δ-optimal table
/// applied to the approximate final signal.
#[derive(Clone, Debug)]
pub struct StochasticPipeline {
    plan: StochasticPlan,
    noise: NoiseModel,
    rounds: usize,
    exploit_audit: Verdict,
}

/// Reward accumulated by one stochastic episode, using mean rewards of the
/// played joint actions at the hidden state.
#[derive(Clone, Debug)]
pub struct StochasticEpisode {
    pub state: usize,
    pub reward: f64,
    pub final_signal: SignalValue,
    pub trace: Option<EpisodeTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Fraction of trials whose final explored set differs from the oracle's.
    pub wrong_set_rate: f64,
}

impl StochasticPipeline {
    pub fn new(u: &UtilityStructure, noise: NoiseModel, rounds: usize, delta: Q) -> Result<Self> {
        if rounds < 2 {
            return Err(Error::Parameter("horizon must be at least 2 for β = 1/T".into()));
        }
        let plan = StochasticPlan::new(u, delta.clone(), Q::one() / qi(rounds as i64))?;
        let required = plan.exploration_rounds();
        if rounds < required {
            return Err(Error::HorizonTooShort { rounds, required });
        }
        let exploit_audit = audit_bic(u, plan.final_structure(), plan.exploit_table(), &delta)?.verdict(u);
        Ok(StochasticPipeline { plan, noise, rounds, exploit_audit })
    }

    pub fn plan(&self) -> &StochasticPlan {
        &self.plan
    }

    pub fn benchmark(&self) -> &Q {
        self.plan.benchmark()
    }

    pub fn exploration_rounds(&self) -> usize {
        self.plan.exploration_rounds()
    }

    pub fn premises(&self, u: &UtilityStructure) -> Vec<PremiseCheck> {
        self.plan.premises(u)
    }

    /// Runs one episode on stream `trial` of `seed`.
    pub fn episode(
        &self,
        u: &UtilityStructure,
        state: Option<usize>,
        seed: u64,
        trial: u64,
        record: bool,
    ) -> Result<StochasticEpisode> {
        let (mut principal, mut world) = episode_rngs(seed, trial);
        let state = pick_state(u, state, &mut world)?;
        let mut env = SimulatedEnvironment::new(u, state, self.noise, world);
        let mut ctx = RunContext::new(u, &mut env, &mut principal);
        if !record {
            ctx = ctx.quiet();
        }
        let signal = self.plan.run(&mut ctx)?;
        let exploit = Exploit::new(
            self.plan.final_structure().clone(),
            self.plan.exploit_table().clone(),
            self.rounds - self.exploration_rounds(),
            self.exploit_audit.clone(),
        );
        exploit.run(&signal, &mut ctx)?;
        let reward = ctx.actions.iter().map(|&a| to_f64(u.reward(a, state))).sum();
        let config = self.plan.config();
        let trace = record.then(|| EpisodeTrace {
            header: EpisodeHeader {
                pipeline: "stochastic".into(),
                state: u.state_name(state).to_string(),
                seed,
                rounds: self.rounds,
                exploration_rounds: self.exploration_rounds(),
                delta: fmt_q(&config.delta),
                beta: fmt_q(&config.beta),
                noise: self.noise.to_string(),
            },
            final_signal: signal.to_string(),
            records: std::mem::take(&mut ctx.log),
        });
        Ok(StochasticEpisode { state, reward, final_signal: signal, trace })
    }

    pub fn report(&self, reward: f64, seed: u64) -> RegretReport {
        let bench = to_f64(self.benchmark());
        let config = self.plan.config();
        RegretReport {
            rounds: self.rounds,
            exploration_rounds: self.exploration_rounds(),
            benchmark: fmt_q(self.benchmark()),
            expected_reward: format!("{reward:.6}"),
            regret: format!("{:.6}", self.rounds as f64 * bench - reward),
            delta: fmt_q(&config.delta),
            beta: fmt_q(&config.beta),
            seed,
        }
    }

    /// Independent episodes on streams `0..trials`, run in parallel and
    /// reduced in trial order.
    pub fn monte_carlo(&self, u: &UtilityStructure, state: Option<usize>, seed: u64, trials: usize) -> Result<MonteCarloSummary> {
        if trials == 0 {
            return Err(Error::Parameter("need at least one trial".into()));
        }
        let oracle = oracle_explorable_map(u, &self.plan.config().delta)?;
        let outcomes: Vec<(f64, bool)> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let ep = self.episode(u, state, seed, t, false)?;
                Ok((ep.reward, ep.final_signal.explored_set() != oracle[ep.state]))
            })
            .collect::<Result<_>>()?;
        let n = trials as f64;
        let mean = outcomes.iter().map(|o| o.0).sum::<f64>() / n;
        let var = if trials > 1 {
            outcomes.iter().map(|o| (o.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let wrong = outcomes.iter().filter(|o| o.1).count() as f64 / n;
        Ok(MonteCarloSummary { trials, mean, stderr: (var / n).sqrt(), wrong_set_rate: wrong })
    }
}

/// Builds the pipeline and runs one recorded episode.
pub fn run_stochastic_pipeline(
    u: &UtilityStructure,
    noise: NoiseModel,
    rounds: usize,
    delta: Q,
    state: Option<usize>,
    seed: u64,
) -> Result<(EpisodeTrace, RegretReport)> {
    let pipeline = StochasticPipeline::new(u, noise, rounds, delta)?;
    let ep = pipeline.episode(u, state, seed, 0, true)?;
    let report = pipeline.report(ep.reward, seed);
    Ok((ep.trace.expect("recorded"), report))
}
