//! Finite-support signal structures.
//!
//! A [`SignalStructure`] stores `Pr[S = s | θ]` as a signal-by-state table
//! together with the canonical value of every feasible signal. Signals with
//! zero prior mass are dropped at construction, so every listed signal is
//! feasible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::game::{JointAction, UtilityStructure};
use crate::rational::{fmt_q, sum, Q};

/// Explored set together with the `(f; u_1..u_n)` block of each explored action.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AllInfoValue {
    explored: Vec<JointAction>,
    block: Vec<Vec<Q>>,
}

impl AllInfoValue {
    /// Builds the value from explored actions and their observed outcome
    /// vectors; pairs are sorted by joint-action index.
    pub fn new(mut entries: Vec<(JointAction, Vec<Q>)>) -> Self {
        entries.sort_by_key(|(a, _)| *a);
        entries.dedup_by_key(|(a, _)| *a);
        let (explored, block) = entries.into_iter().unzip();
        AllInfoValue { explored, block }
    }

    /// The exact value `AllInfo(B)` takes at `state`.
    pub fn at_state(u: &UtilityStructure, explored: &BTreeSet<JointAction>, state: usize) -> Self {
        AllInfoValue::new(explored.iter().map(|&a| (a, u.outcome(a, state))).collect())
    }

    pub fn explored(&self) -> &[JointAction] {
        &self.explored
    }

    pub fn explored_set(&self) -> BTreeSet<JointAction> {
        self.explored.iter().copied().collect()
    }

    pub fn block(&self) -> &[Vec<Q>] {
        &self.block
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignalValue {
    /// The empty signal ⊥.
    Empty,
    AllInfo(AllInfoValue),
    /// An opaque label, for hand-built structures.
    Label(String),
}

impl SignalValue {
    /// Explored set recorded in the value (empty for ⊥ and labels).
    pub fn explored_set(&self) -> BTreeSet<JointAction> {
        match self {
            SignalValue::AllInfo(v) => v.explored_set(),
            _ => BTreeSet::new(),
        }
    }
}

/// Canonical serialized form; two values are equal iff these strings are.
impl fmt::Display for SignalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalValue::Empty => f.write_str("⊥"),
            SignalValue::Label(l) => write!(f, "label:{l}"),
            SignalValue::AllInfo(v) => {
                let set: Vec<String> = v.explored.iter().map(|a| a.0.to_string()).collect();
                let rows: Vec<String> = v
                    .block
                    .iter()
                    .map(|row| row.iter().map(fmt_q).collect::<Vec<_>>().join(";"))
                    .collect();
                write!(f, "B=[{}] U=[{}]", set.join(","), rows.join("|"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalStructure {
    values: Vec<SignalValue>,
    /// `table[s][θ] = Pr[S = s | θ]`
    table: Vec<Vec<Q>>,
    /// `state_map[θ] = s` when every positive-prior column is a point mass.
    state_map: Option<Vec<Option<usize>>>,
}

impl SignalStructure {
    /// Checks column sums, drops zero-mass signals and detects state-determined structure.
    pub fn new(u: &UtilityStructure, values: Vec<SignalValue>, table: Vec<Vec<Q>>) -> Result<Self> {
        let num_states = u.num_states();
        if values.len() != table.len() {
            return Err(Error::Dimension(format!(
                "{} signal values for {} table rows",
                values.len(),
                table.len()
            )));
        }
        if table.iter().any(|row| row.len() != num_states) {
            return Err(Error::Dimension("signal table row length differs from |Θ|".into()));
        }
        let distinct: BTreeSet<&SignalValue> = values.iter().collect();
        if distinct.len() != values.len() {
            return Err(Error::Dimension("duplicate signal values".into()));
        }
        for state in 0..num_states {
            if table.iter().any(|row| row[state].is_negative()) {
                return Err(Error::Dimension(format!("negative probability in column {state}")));
            }
            let col: Q = table.iter().fold(Q::zero(), |acc, row| acc + &row[state]);
            if !col.is_one() {
                return Err(Error::Dimension(format!(
                    "column for state {state} sums to {}",
                    fmt_q(&col)
                )));
            }
        }
        let (values, table): (Vec<_>, Vec<_>) = values
            .into_iter()
            .zip(table)
            .filter(|(_, row)| row.iter().enumerate().any(|(k, p)| p.is_positive() && u.prior(k).is_positive()))
            .unzip();

        let mut state_map = Some(vec![None; num_states]);
        for state in 0..num_states {
            let support: Vec<usize> = (0..table.len()).filter(|&s| table[s][state].is_positive()).collect();
            let map = state_map.as_mut().unwrap();
            match support.as_slice() {
                [] => {}
                [s] if table[*s][state].is_one() => map[state] = Some(*s),
                _ if u.prior(state).is_zero() => {}
                _ => {
                    state_map = None;
                    break;
                }
            }
        }
        Ok(SignalStructure { values, table, state_map })
    }

    /// Structure of a state-determined signal given its value at every state.
    pub fn from_state_values(u: &UtilityStructure, per_state: Vec<SignalValue>) -> Result<Self> {
        if per_state.len() != u.num_states() {
            return Err(Error::Dimension("one signal value per state required".into()));
        }
        let mut values: Vec<SignalValue> = Vec::new();
        let mut index: BTreeMap<SignalValue, usize> = BTreeMap::new();
        for v in &per_state {
            if !index.contains_key(v) {
                index.insert(v.clone(), values.len());
                values.push(v.clone());
            }
        }
        let mut table = vec![vec![Q::zero(); u.num_states()]; values.len()];
        for (state, v) in per_state.iter().enumerate() {
            table[index[v]][state] = Q::one();
        }
        SignalStructure::new(u, values, table)
    }

    pub fn num_signals(&self) -> usize {
        self.values.len()
    }

    pub fn num_states(&self) -> usize {
        self.table.first().map_or(0, Vec::len)
    }

    pub fn values(&self) -> &[SignalValue] {
        &self.values
    }

    pub fn value(&self, s: usize) -> &SignalValue {
        &self.values[s]
    }

    pub fn index_of(&self, value: &SignalValue) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }

    /// `Pr[S = s | θ]`
    pub fn prob(&self, s: usize, state: usize) -> &Q {
        &self.table[s][state]
    }

    pub fn table(&self) -> &[Vec<Q>] {
        &self.table
    }

    /// `Pr[S = s]`
    pub fn mass(&self, u: &UtilityStructure, s: usize) -> Q {
        (0..u.num_states()).fold(Q::zero(), |acc, k| acc + u.prior(k) * &self.table[s][k])
    }

    pub fn min_mass(&self, u: &UtilityStructure) -> Q {
        (0..self.num_signals())
            .map(|s| self.mass(u, s))
            .min()
            .unwrap_or_else(Q::zero)
    }

    pub fn is_deterministic(&self) -> bool {
        self.state_map.is_some()
    }

    /// Signal index at `state` for state-determined structures.
    pub fn signal_at(&self, state: usize) -> Option<usize> {
        self.state_map.as_ref().and_then(|m| m[state])
    }

    /// When both signals are state-determined and the value of `self`
    /// determines the value of `other`, returns the map `g: s -> s'`.
    pub fn determines(&self, other: &SignalStructure) -> Option<Vec<usize>> {
        let mine = self.state_map.as_ref()?;
        let theirs = other.state_map.as_ref()?;
        let mut g: Vec<Option<usize>> = vec![None; self.num_signals()];
        for (state, s) in mine.iter().enumerate() {
            let (Some(s), Some(t)) = (*s, theirs[state]) else { continue };
            match g[s] {
                None => g[s] = Some(t),
                Some(prev) if prev != t => return None,
                _ => {}
            }
        }
        g.into_iter().collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "signals": self.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "table": self.table.iter().map(|row| row.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// The empty signal ⊥.
pub fn empty_signal(u: &UtilityStructure) -> SignalStructure {
    SignalStructure::from_state_values(u, vec![SignalValue::Empty; u.num_states()])
        .expect("empty signal is well formed")
}

/// `AllInfo(B)` for a state-dependent explored-set map `B(θ)`.
pub fn all_info(u: &UtilityStructure, explored: &[BTreeSet<JointAction>]) -> Result<SignalStructure> {
    if explored.len() != u.num_states() {
        return Err(Error::Dimension("explored-set map needs one entry per state".into()));
    }
    let per_state = explored
        .iter()
        .enumerate()
        .map(|(k, b)| SignalValue::AllInfo(AllInfoValue::at_state(u, b, k)))
        .collect();
    SignalStructure::from_state_values(u, per_state)
}

/// Joint law of two coupled signals given the state:
/// `joint[θ][s][s'] = Pr[S = s, S' = s' | θ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    joint: Vec<Vec<Vec<Q>>>,
}

impl Coupling {
    pub fn new(joint: Vec<Vec<Vec<Q>>>) -> Self {
        Coupling { joint }
    }

    /// The coupling induced by two state-determined signals.
    pub fn from_state_determined(first: &SignalStructure, second: &SignalStructure) -> Result<Self> {
        let num_states = first.num_states();
        let mut joint = vec![vec![vec![Q::zero(); second.num_signals()]; first.num_signals()]; num_states];
        for (state, slot) in joint.iter_mut().enumerate() {
            let (Some(s), Some(t)) = (first.signal_at(state), second.signal_at(state)) else {
                if first.state_map.is_none() || second.state_map.is_none() {
                    return Err(Error::Coupling("both signals must be state-determined".into()));
                }
                continue;
            };
            slot[s][t] = Q::one();
        }
        Ok(Coupling { joint })
    }

    pub fn prob(&self, state: usize, s: usize, t: usize) -> &Q {
        &self.joint[state][s][t]
    }

    fn check(&self, u: &UtilityStructure, first: &SignalStructure, second: &SignalStructure) -> Result<()> {
        if self.joint.len() != u.num_states() {
            return Err(Error::Coupling("coupling needs one slice per state".into()));
        }
        for (state, slice) in self.joint.iter().enumerate() {
            if u.prior(state).is_zero() {
                continue;
            }
            if slice.len() != first.num_signals() || slice.iter().any(|r| r.len() != second.num_signals()) {
                return Err(Error::Coupling("coupling slice has the wrong shape".into()));
            }
            for (s, row) in slice.iter().enumerate() {
                if row.iter().any(Signed::is_negative) {
                    return Err(Error::Coupling("negative coupling entry".into()));
                }
                if sum(row) != *first.prob(s, state) {
                    return Err(Error::Coupling(format!("row marginal mismatch at state {state}, signal {s}")));
                }
            }
            for t in 0..second.num_signals() {
                let col = slice.iter().fold(Q::zero(), |acc, row| acc + &row[t]);
                if col != *second.prob(t, state) {
                    return Err(Error::Coupling(format!("column marginal mismatch at state {state}, signal {t}")));
                }
            }
        }
        Ok(())
    }
}

/// Whether `Pr[θ | S=s, S'=s'] = Pr[θ | S=s]` for every positive-mass `(s, s')`.
pub fn at_least_as_informative(
    u: &UtilityStructure,
    first: &SignalStructure,
    second: &SignalStructure,
    coupling: &Coupling,
) -> Result<bool> {
    coupling.check(u, first, second)?;
    for s in 0..first.num_signals() {
        let mass_s = first.mass(u, s);
        if mass_s.is_zero() {
            continue;
        }
        for t in 0..second.num_signals() {
            let mass_st = (0..u.num_states()).fold(Q::zero(), |acc, k| acc + u.prior(k) * coupling.prob(k, s, t));
            if mass_st.is_zero() {
                continue;
            }
            for k in 0..u.num_states() {
                let lhs = u.prior(k) * coupling.prob(k, s, t) / &mass_st;
                let rhs = u.prior(k) * first.prob(s, k) / &mass_s;
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `max_θ Pr[S ≠ Ŝ | θ]` under the coupling. Every value Ŝ can take must be
/// a value of `S`.
pub fn approx_distance(
    u: &UtilityStructure,
    signal: &SignalStructure,
    approx: &SignalStructure,
    coupling: &Coupling,
) -> Result<Q> {
    coupling.check(u, signal, approx)?;
    for v in approx.values() {
        if signal.index_of(v).is_none() {
            return Err(Error::Coupling(format!("approximate signal takes value {v} outside the universe")));
        }
    }
    let mut worst = Q::zero();
    for state in u.positive_prior_states() {
        let mut mismatch = Q::zero();
        for s in 0..signal.num_signals() {
            for t in 0..approx.num_signals() {
                if signal.value(s) != approx.value(t) {
                    mismatch += coupling.prob(state, s, t);
                }
            }
        }
        if mismatch > worst {
            worst = mismatch;
        }
    }
    Ok(worst)
}
