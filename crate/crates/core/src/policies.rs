//! Policy representations: tabular optima, threshold rules and the two
//! baselines (always transmit, trust the pre-identifier).

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::{StateIndex, StateSpace};
use crate::model::{Action, State};

/// One action per state, indexed by [`StateIndex`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionTable(Vec<Action>);

impl ActionTable {
    pub fn new(actions: Vec<Action>) -> Self {
        Self(actions)
    }

    pub fn from_fn(space: StateSpace, mut f: impl FnMut(State) -> Action) -> Self {
        Self(space.states().map(&mut f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, s: StateIndex) -> Action {
        self.0[s.0]
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn check_size(&self, space: StateSpace) -> Result<()> {
        if self.0.len() == space.len() {
            Ok(())
        } else {
            Err(Error::PolicySize {
                got: self.0.len(),
                expected: space.len(),
            })
        }
    }

    /// Reads the `"policy"` array of an exported solution document.
    pub fn from_solution_json(doc: &serde_json::Value) -> std::result::Result<Self, serde_json::Error> {
        let policy = doc.get("policy").cloned().unwrap_or(serde_json::Value::Null);
        serde_json::from_value(policy)
    }
}

/// Transmission threshold for one pre-identification group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Threshold {
    /// Transmit iff `delta >= omega`.
    At(usize),
    /// Never transmit in this group.
    Never,
}

impl Threshold {
    #[inline]
    pub fn transmits(self, delta: usize) -> bool {
        match self {
            Threshold::At(omega) => delta >= omega,
            Threshold::Never => false,
        }
    }

    pub fn value(self) -> Option<usize> {
        match self {
            Threshold::At(o) => Some(o),
            Threshold::Never => None,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::At(o) => write!(f, "{o}"),
            Threshold::Never => f.write_str("never"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::At(o) => ser.serialize_u64(*o as u64),
            Threshold::Never => ser.serialize_str("never"),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Threshold;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"never\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Threshold, E> {
                if v == 0 {
                    return Err(E::custom("threshold must be at least 1"));
                }
                Ok(Threshold::At(v as usize))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Threshold, E> {
                if v < 1 {
                    return Err(E::custom("threshold must be at least 1"));
                }
                Ok(Threshold::At(v as usize))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Threshold, E> {
                if v == "never" {
                    Ok(Threshold::Never)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        de.deserialize_any(V)
    }
}

/// Thresholds for the `F = 0` and `F = 1` groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(rename = "F0")]
    pub f0: Threshold,
    #[serde(rename = "F1")]
    pub f1: Threshold,
}

impl Thresholds {
    pub fn new(f0: Threshold, f1: Threshold) -> Self {
        Self { f0, f1 }
    }

    #[inline]
    pub fn get(&self, pre_id: bool) -> Threshold {
        if pre_id {
            self.f1
        } else {
            self.f0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    Optimal(ActionTable),
    Threshold(Thresholds),
    AlwaysTransmit,
    /// Transmit exactly when the pre-identifier reports a target.
    PreIdBased,
}

impl PolicyKind {
    /// Never transmits; the TAoI climbs to the cap and stays there.
    pub fn never_transmit() -> Self {
        PolicyKind::Threshold(Thresholds::new(Threshold::Never, Threshold::Never))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Optimal(_) => "optimal",
            PolicyKind::Threshold(_) => "threshold",
            PolicyKind::AlwaysTransmit => "always-transmit",
            PolicyKind::PreIdBased => "pre-id-based",
        }
    }

    /// Action in state `s`. Tabular policies fail on states outside the
    /// table; the other kinds are defined everywhere.
    pub fn decide(&self, s: State) -> Result<Action> {
        Ok(match self {
            PolicyKind::AlwaysTransmit => Action::Transmit,
            PolicyKind::PreIdBased => Action::from(s.pre_id),
            PolicyKind::Threshold(t) => Action::from(t.get(s.pre_id).transmits(s.delta)),
            PolicyKind::Optimal(table) => {
                let delta_max = table.len() / 2;
                if s.delta == 0 || s.delta > delta_max {
                    return Err(Error::StateOutOfRange {
                        delta: s.delta,
                        pre_id: s.pre_id.into(),
                    });
                }
                table.get(StateSpace::new(delta_max).index(s))
            }
        })
    }

    /// Materializes the policy over `space`.
    pub fn to_table(&self, space: StateSpace) -> Result<ActionTable> {
        if let PolicyKind::Optimal(t) = self {
            t.check_size(space)?;
            return Ok(t.clone());
        }
        space
            .states()
            .map(|s| self.decide(s))
            .collect::<Result<Vec<_>>>()
            .map(ActionTable)
    }
}
