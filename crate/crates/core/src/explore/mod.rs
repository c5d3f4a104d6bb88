//! Iterative recommendation policies built from subroutines.
//!
//! A [`Subroutine`] runs for a fixed number of rounds, reads a realized input
//! signal and emits an output signal. Durations and signal structures depend
//! only on the game, never on the realized state or the seed.

pub mod det;
pub mod stoch;

use std::collections::BTreeMap;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointAction, NoiseModel, UtilityStructure};
use crate::policy::PolicyTable;
use crate::rational::{fmt_q, Q};
use crate::signal::{SignalStructure, SignalValue};

/// What the principal can do with the world: play a joint action and read
/// back the realized `(f; u_1..u_n)`.
pub trait Environment {
    fn play(&mut self, a: JointAction) -> Vec<Q>;
}

/// A game at a fixed hidden state, with realized utilities drawn by a noise model.
pub struct SimulatedEnvironment<'a> {
    u: &'a UtilityStructure,
    state: usize,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl<'a> SimulatedEnvironment<'a> {
    pub fn new(u: &'a UtilityStructure, state: usize, noise: NoiseModel, rng: ChaCha8Rng) -> Self {
        SimulatedEnvironment { u, state, noise, rng }
    }

    pub fn state(&self) -> usize {
        self.state
    }
}

impl Environment for SimulatedEnvironment<'_> {
    fn play(&mut self, a: JointAction) -> Vec<Q> {
        self.noise.realize(self.u, a, self.state, &mut self.rng)
    }
}

/// Outcome of auditing the policy that generated a round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "verdict")]
pub enum Verdict {
    Pass { min_margin: String },
    Fail { agent: usize, action: String, deviation: String, margin: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub phase: String,
    pub signal: String,
    /// Recommendation distribution at the realized signal, positive entries only.
    pub distribution: BTreeMap<String, String>,
    pub action: String,
    pub outcome: Vec<String>,
    pub audit: Verdict,
}

/// Mutable state threaded through a subroutine run.
pub struct RunContext<'a> {
    pub u: &'a UtilityStructure,
    pub env: &'a mut dyn Environment,
    pub rng: &'a mut dyn RngCore,
    pub log: Vec<RoundRecord>,
    /// Every played joint action, kept even when records are off.
    pub actions: Vec<JointAction>,
    recording: bool,
}

impl<'a> RunContext<'a> {
    pub fn new(u: &'a UtilityStructure, env: &'a mut dyn Environment, rng: &'a mut dyn RngCore) -> Self {
        RunContext { u, env, rng, log: Vec::new(), actions: Vec::new(), recording: true }
    }

    /// Skips building per-round records; only `actions` is filled.
    pub fn quiet(mut self) -> Self {
        self.recording = false;
        self
    }

    /// Plays `a`, appends a trace record and returns the realized outcome.
    pub(crate) fn play(
        &mut self,
        phase: &str,
        signal: &SignalValue,
        column: &[Q],
        a: JointAction,
        audit: &Verdict,
    ) -> Vec<Q> {
        let outcome = self.env.play(a);
        self.actions.push(a);
        if !self.recording {
            return outcome;
        }
        let distribution = column
            .iter()
            .enumerate()
            .filter(|(_, p)| !num_traits::Zero::is_zero(*p))
            .map(|(b, p)| (self.u.action_name(JointAction(b)), fmt_q(p)))
            .collect();
        self.log.push(RoundRecord {
            round: self.actions.len(),
            phase: phase.to_string(),
            signal: signal.to_string(),
            distribution,
            action: self.u.action_name(a),
            outcome: outcome.iter().map(fmt_q).collect(),
            audit: audit.clone(),
        });
        outcome
    }
}

pub trait Subroutine {
    fn duration(&self) -> usize;
    fn input_structure(&self) -> &SignalStructure;
    fn output_structure(&self) -> &SignalStructure;
    /// Runs every round and returns the realized output signal.
    fn run(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<SignalValue>;
}

impl<S: Subroutine + ?Sized> Subroutine for Box<S> {
    fn duration(&self) -> usize {
        (**self).duration()
    }
    fn input_structure(&self) -> &SignalStructure {
        (**self).input_structure()
    }
    fn output_structure(&self) -> &SignalStructure {
        (**self).output_structure()
    }
    fn run(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        (**self).run(input, ctx)
    }
}

/// Zero-duration pass-through.
#[derive(Clone, Debug)]
pub struct Identity {
    structure: SignalStructure,
}

impl Identity {
    pub fn new(structure: SignalStructure) -> Self {
        Identity { structure }
    }
}

impl Subroutine for Identity {
    fn duration(&self) -> usize {
        0
    }
    fn input_structure(&self) -> &SignalStructure {
        &self.structure
    }
    fn output_structure(&self) -> &SignalStructure {
        &self.structure
    }
    fn run(&self, input: &SignalValue, _ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        Ok(input.clone())
    }
}

/// Runs `first`, then feeds its output to `second`.
pub struct Composed<A, B> {
    first: A,
    second: B,
}

pub fn compose<A: Subroutine, B: Subroutine>(first: A, second: B) -> Result<Composed<A, B>> {
    if first.output_structure() != second.input_structure() {
        return Err(Error::InvalidSequel(
            "second subroutine does not read the first one's output signal".into(),
        ));
    }
    Ok(Composed { first, second })
}

impl<A: Subroutine, B: Subroutine> Subroutine for Composed<A, B> {
    fn duration(&self) -> usize {
        self.first.duration() + self.second.duration()
    }
    fn input_structure(&self) -> &SignalStructure {
        self.first.input_structure()
    }
    fn output_structure(&self) -> &SignalStructure {
        self.second.output_structure()
    }
    fn run(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        let mid = self.first.run(input, ctx)?;
        self.second.run(&mid, ctx)
    }
}

/// Repeats a fixed policy table for a number of rounds; the output signal is
/// the input signal.
#[derive(Clone, Debug)]
pub struct Exploit {
    structure: SignalStructure,
    table: PolicyTable,
    rounds: usize,
    audit: Verdict,
    label: String,
}

impl Exploit {
    pub fn new(structure: SignalStructure, table: PolicyTable, rounds: usize, audit: Verdict) -> Self {
        Exploit { structure, table, rounds, audit, label: "exploit".into() }
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }
}

impl Subroutine for Exploit {
    fn duration(&self) -> usize {
        self.rounds
    }
    fn input_structure(&self) -> &SignalStructure {
        &self.structure
    }
    fn output_structure(&self) -> &SignalStructure {
        &self.structure
    }
    fn run(&self, input: &SignalValue, ctx: &mut RunContext<'_>) -> Result<SignalValue> {
        let s = self.structure.index_of(input).ok_or(Error::SignalOutsideSupport)?;
        let column = self.table.column(s);
        for _ in 0..self.rounds {
            let a = sample_column(column, ctx.rng);
            ctx.play(&self.label, input, column, a, &self.audit);
        }
        Ok(input.clone())
    }
}

/// Draws a joint action from an exact probability column.
pub(crate) fn sample_column(column: &[Q], rng: &mut dyn RngCore) -> JointAction {
    use rand::distributions::{Distribution, WeightedIndex};
    let weights: Vec<f64> = column.iter().map(crate::rational::to_f64).collect();
    let support: Vec<usize> = (0..column.len()).filter(|&a| weights[a] > 0.0).collect();
    if support.len() == 1 {
        return JointAction(support[0]);
    }
    let dist = WeightedIndex::new(&weights).expect("column is a distribution");
    JointAction(dist.sample(rng))
}
