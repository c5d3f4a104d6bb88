//! JSON scenario files. Rationals are written as `"p/q"` strings; decimal
//! strings and plain JSON numbers are read exactly.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{GameSpec, NoiseModel, UtilityStructure};
use crate::rational::{fmt_q, parse_rational, Q};

/// A rational that serializes as `"p/q"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rational(pub Q);

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as \"p/q\", a decimal string or a number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
                parse_rational(v).map(Rational).map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
                self.visit_str(&v.to_string())
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
                self.visit_str(&v.to_string())
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Rational, E> {
                // shortest round-trip text of the literal, then exact decimal parse
                self.visit_str(&v.to_string())
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub actions: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseModel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub agents: Vec<AgentSpec>,
    pub states: Vec<String>,
    pub prior: Vec<Rational>,
    /// `utilities[i][a][θ]` over joint actions in row-major order.
    pub utilities: Vec<Vec<Vec<Rational>>>,
    /// `reward[a][θ]`
    pub reward: Vec<Vec<Rational>>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_state: Option<String>,
}

fn unwrap_all(v: &[Rational]) -> Vec<Q> {
    v.iter().map(|r| r.0.clone()).collect()
}

fn wrap_all(v: &[Q]) -> Vec<Rational> {
    v.iter().cloned().map(Rational).collect()
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub game: UtilityStructure,
    pub noise: NoiseModel,
    pub fixed_state: Option<usize>,
}

impl Scenario {
    pub fn new(game: UtilityStructure, noise: NoiseModel, fixed_state: Option<usize>) -> Self {
        Scenario { game, noise, fixed_state }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        Self::from_file_format(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_file_format(file: ScenarioFile) -> Result<Self> {
        let spec = GameSpec {
            action_names: file.agents.into_iter().map(|a| a.actions).collect(),
            state_names: file.states,
            prior: unwrap_all(&file.prior),
            utilities: file.utilities.iter().map(|t| t.iter().map(|r| unwrap_all(r)).collect()).collect(),
            reward: file.reward.iter().map(|r| unwrap_all(r)).collect(),
        };
        let game = UtilityStructure::new(spec)?;
        let fixed_state = match file.fixed_state {
            None => None,
            Some(name) => Some(
                game.state_index(&name)
                    .ok_or_else(|| Error::Scenario(format!("fixed_state {name:?} is not a declared state")))?,
            ),
        };
        Ok(Scenario { game, noise: file.noise.kind, fixed_state })
    }

    pub fn to_file_format(&self) -> ScenarioFile {
        let spec = self.game.spec();
        ScenarioFile {
            agents: spec.action_names.iter().map(|a| AgentSpec { actions: a.clone() }).collect(),
            states: spec.state_names.clone(),
            prior: wrap_all(&spec.prior),
            utilities: spec.utilities.iter().map(|t| t.iter().map(|r| wrap_all(r)).collect()).collect(),
            reward: spec.reward.iter().map(|r| wrap_all(r)).collect(),
            noise: NoiseSpec { kind: self.noise },
            fixed_state: self.fixed_state.map(|k| self.game.state_name(k).to_string()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file_format())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::rational::q;

    const KP: &str = r#"{
        "agents": [{"actions": ["a1", "a2"]}],
        "states": ["half_zero", "half_one", "one_zero", "one_one"],
        "prior": ["1/4", "0.25", "1/4", 0.25],
        "utilities": [[["1/2", "1/2", 1, 1], [0, 1, 0, 1]]],
        "reward": [["1/2", "1/2", 1, 1], [0, 1, 0, 1]],
        "noise": {"kind": "deterministic"}
    }"#;

    #[test]
    fn parses_mixed_rational_forms() {
        let s = Scenario::from_json(KP).unwrap();
        assert_eq!(s.game, instances::two_arm());
        assert_eq!(s.noise, NoiseModel::Deterministic);
        assert_eq!(s.fixed_state, None);
    }

    #[test]
    fn round_trip_is_identity() {
        let s = Scenario::from_json(KP).unwrap();
        let again = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_file_format(), again.to_file_format());

        let d = Scenario::new(instances::dominant_action(), NoiseModel::Bernoulli, Some(1));
        assert_eq!(Scenario::from_json(&d.to_json().unwrap()).unwrap(), d);
    }

    #[test]
    fn reports_bad_inputs() {
        let bad_prior = KP.replace(r#""prior": ["1/4", "0.25", "1/4", 0.25]"#, r#""prior": ["1/2", "0.25", "1/4", 0.25]"#);
        let err = Scenario::from_json(&bad_prior).unwrap_err().to_string();
        assert!(err.contains("prior sums to 5/4"), "{err}");

        let bad_entry = KP.replace(r#"[0, 1, 0, 1]]]"#, r#"[0, 1.5, 0, 1]]]"#);
        assert!(Scenario::from_json(&bad_entry).unwrap_err().to_string().contains("entry out of range"));

        let bad_text = KP.replace(r#""1/4", "0.25""#, r#""1/4", "x""#);
        assert!(matches!(Scenario::from_json(&bad_text), Err(Error::Scenario(_))));

        let bad_state = KP.replace(r#""noise""#, r#""fixed_state": "nowhere", "noise""#);
        assert!(matches!(Scenario::from_json(&bad_state), Err(Error::Scenario(_))));
    }

    #[test]
    fn decimal_numbers_are_exact() {
        let text = KP.replace(r#""1/2", "1/2", 1, 1], [0, 1, 0, 1]]]"#, r#"0.125, 0.5, 1, 1], [0, 1, 0, 1]]]"#);
        let s = Scenario::from_json(&text).unwrap();
        assert_eq!(s.game.utility(0, crate::JointAction(0), 0), &q(1, 8));
    }
}
