//! System parameters, pre-identification posteriors, TAoI dynamics and rewards.
//!
//! An instance is described by the target prior `q`, the pre-identifier's
//! confusion probabilities `p_a` (false positive) and `p_b` (false negative),
//! the per-image transmission delay `t_u` in slots and the TAoI cap
//! `delta_max`. Decisions happen at step boundaries; a skip lasts one slot and
//! a transmission lasts `t_u` slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Transmission decision at the start of a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Action {
    Skip = 0,
    Transmit = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Skip, Action::Transmit];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn is_transmit(self) -> bool {
        self == Action::Transmit
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a as u8
    }
}

impl TryFrom<u8> for Action {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Action::Skip),
            1 => Ok(Action::Transmit),
            other => Err(format!("action must be 0 or 1, got {other}")),
        }
    }
}

impl From<bool> for Action {
    fn from(transmit: bool) -> Self {
        if transmit {
            Action::Transmit
        } else {
            Action::Skip
        }
    }
}

/// Decision-epoch state: TAoI at the start of the step and the latest
/// pre-identification bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub delta: usize,
    pub pre_id: bool,
}

impl State {
    pub fn new(delta: usize, pre_id: bool) -> Self {
        Self { delta, pre_id }
    }
}

#[derive(Deserialize)]
struct RawParams<T> {
    q: T,
    p_a: T,
    p_b: T,
    t_u: usize,
    delta_max: usize,
    #[serde(default)]
    allow_null_outcome: bool,
}

impl<T: Scalar> TryFrom<RawParams<T>> for SystemParams<T> {
    type Error = Error;

    fn try_from(raw: RawParams<T>) -> Result<Self> {
        let p = SystemParams {
            q: raw.q,
            p_a: raw.p_a,
            p_b: raw.p_b,
            t_u: raw.t_u,
            delta_max: raw.delta_max,
            allow_null_outcome: raw.allow_null_outcome,
        };
        p.validate()?;
        Ok(p)
    }
}

/// The five scalars defining an instance.
///
/// Construction validates every range constraint and rejects parameter sets
/// in which one pre-identification outcome has probability zero, because the
/// corresponding posterior is undefined. [`SystemParams::allowing_null_outcome`]
/// relaxes only the latter: the undefined posterior then falls back to the
/// prior, which is harmless because the outcome never occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<T>")]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SystemParams<T> {
    q: T,
    p_a: T,
    p_b: T,
    t_u: usize,
    delta_max: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    allow_null_outcome: bool,
}

fn check_probability<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() && v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{v} is not a probability in [0, 1]"),
        })
    }
}

impl<T: Scalar> SystemParams<T> {
    pub fn new(q: T, p_a: T, p_b: T, t_u: usize, delta_max: usize) -> Result<Self> {
        let p = Self {
            q,
            p_a,
            p_b,
            t_u,
            delta_max,
            allow_null_outcome: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Like [`SystemParams::new`], but accepts instances where one
    /// pre-identification outcome has zero probability (e.g. `q = 1`,
    /// `p_b = 0`).
    pub fn allowing_null_outcome(q: T, p_a: T, p_b: T, t_u: usize, delta_max: usize) -> Result<Self> {
        let p = Self {
            q,
            p_a,
            p_b,
            t_u,
            delta_max,
            allow_null_outcome: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("q", self.q)?;
        check_probability("p_a", self.p_a)?;
        check_probability("p_b", self.p_b)?;
        if self.t_u == 0 {
            return Err(Error::InvalidParameter {
                name: "t_u",
                reason: "transmission delay must be at least one slot".into(),
            });
        }
        if self.delta_max < self.t_u {
            return Err(Error::InvalidParameter {
                name: "delta_max",
                reason: format!("cap {} is below the reset value t_u = {}", self.delta_max, self.t_u),
            });
        }
        derive_probs(self).map(|_| ())
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn p_a(&self) -> T {
        self.p_a
    }

    pub fn p_b(&self) -> T {
        self.p_b
    }

    pub fn t_u(&self) -> usize {
        self.t_u
    }

    pub fn delta_max(&self) -> usize {
        self.delta_max
    }

    pub fn allows_null_outcome(&self) -> bool {
        self.allow_null_outcome
    }

    /// Same instance with a different cap.
    pub fn with_delta_max(&self, delta_max: usize) -> Result<Self> {
        let mut p = *self;
        p.delta_max = delta_max;
        p.validate()?;
        Ok(p)
    }

    pub fn with_t_u(&self, t_u: usize) -> Result<Self> {
        let mut p = *self;
        p.t_u = t_u;
        p.validate()?;
        Ok(p)
    }

    pub fn with_q(&self, q: T) -> Result<Self> {
        let mut p = *self;
        p.q = q;
        p.validate()?;
        Ok(p)
    }

    /// Number of decision states, `2 * delta_max`.
    pub fn num_states(&self) -> usize {
        2 * self.delta_max
    }

    /// Slots spent in a step that takes action `a`.
    #[inline]
    pub fn sojourn(&self, a: Action) -> usize {
        match a {
            Action::Skip => 1,
            Action::Transmit => self.t_u,
        }
    }

    /// TAoI at the start of the next step.
    ///
    /// `success` is the task indicator `d` and is ignored for skips.
    #[inline]
    pub fn next_delta(&self, delta: usize, a: Action, success: bool) -> usize {
        match (a, success) {
            (Action::Transmit, true) => self.t_u,
            (Action::Transmit, false) => (delta + self.t_u).min(self.delta_max),
            (Action::Skip, _) => (delta + 1).min(self.delta_max),
        }
    }

    /// Accumulated per-slot TAoI over one step, `L (delta + (L - 1) / 2)`.
    pub fn smdp_reward(&self, s: State, a: Action) -> T {
        let l = self.sojourn(a);
        // Integer form is exact; l * (l - 1) is always even.
        T::from_count(l * s.delta + l * (l - 1) / 2)
    }

    /// Per-slot reward of the uniformized chain, `delta + (L - 1) / 2`.
    pub fn uniformized_reward(&self, s: State, a: Action) -> T {
        let l = self.sojourn(a);
        T::from_count(s.delta) + T::from_count(l - 1) / T::lit(2.0)
    }
}

/// Pre-identification marginals and posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedProbs<T> {
    /// `Pr(F = 1)`.
    pub g: T,
    /// `Pr(Y = 0 | F = 1)`.
    pub p_hat_a: T,
    /// `Pr(Y = 1 | F = 0)`.
    pub p_hat_b: T,
}

impl<T: Scalar> DerivedProbs<T> {
    /// `Pr(d = 1 | F)` for a transmission.
    #[inline]
    pub fn success_prob(&self, pre_id: bool) -> T {
        if pre_id {
            T::one() - self.p_hat_a
        } else {
            self.p_hat_b
        }
    }

    /// `Pr(d = 0 | F)` for a transmission.
    #[inline]
    pub fn failure_prob(&self, pre_id: bool) -> T {
        if pre_id {
            self.p_hat_a
        } else {
            T::one() - self.p_hat_b
        }
    }
}

/// Marginal `g` and the two posteriors from the prior and confusion rates.
pub fn derive_probs<T: Scalar>(params: &SystemParams<T>) -> Result<DerivedProbs<T>> {
    let one = T::one();
    let (q, p_a, p_b) = (params.q, params.p_a, params.p_b);
    let g = p_a * (one - q) + (one - p_b) * q;

    let pos_joint_neg = (one - q) * p_a;
    let pos_den = pos_joint_neg + q * (one - p_b);
    let neg_joint_pos = q * p_b;
    let neg_den = (one - q) * (one - p_a) + neg_joint_pos;

    let p_hat_a = if pos_den > T::zero() {
        pos_joint_neg / pos_den
    } else if params.allow_null_outcome {
        one - q
    } else {
        return Err(Error::DegeneratePosterior { pre_id: 1 });
    };
    let p_hat_b = if neg_den > T::zero() {
        neg_joint_pos / neg_den
    } else if params.allow_null_outcome {
        q
    } else {
        return Err(Error::DegeneratePosterior { pre_id: 0 });
    };

    Ok(DerivedProbs { g, p_hat_a, p_hat_b })
}
