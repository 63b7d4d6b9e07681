//! Average-TAoI optimal policies and their verification.
//!
//! Two value-iteration solvers work on the uniformized MDP: plain relative
//! value iteration and a threshold-aware variant that skips the two-action
//! minimization once a group's threshold has been found within a sweep.
//! Exact policy evaluation works on the embedded SMDP and is the ground
//! truth used by the exhaustive oracle and the baselines.

mod evaluate;
mod oracle;
mod rvi;
mod thresholds;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_transitions, uniformize_with, SelfLoop, StateIndex, UniformizedMdp};
use crate::model::{State, SystemParams};
use crate::policies::{ActionTable, Thresholds};
use crate::scalar::Scalar;

pub use evaluate::{evaluate_policy_exact, evaluate_policy_uniformized, PolicyValue};
pub use oracle::{brute_force_optimal, OracleResult, ORACLE_STATE_GUARD};
pub use rvi::{rvi, rvi_threshold};
pub use thresholds::extract_thresholds;
pub use verify::{verify_structure, CheckOutcome, LemmaReport, SlopeBound};

pub const DEFAULT_EPSILON: f64 = 0.9;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig<T> {
    /// Uniformization constant in `(0, 1]`.
    pub epsilon: T,
    /// Stop once successive relative values differ by less than this.
    pub tol: T,
    pub max_iters: usize,
    /// Reference state; `None` selects the post-success state `(t_u, 1)`.
    pub ref_state: Option<(usize, bool)>,
    pub self_loop: SelfLoop,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            epsilon: T::lit(DEFAULT_EPSILON),
            tol: T::lit(DEFAULT_TOL),
            max_iters: DEFAULT_MAX_ITERS,
            ref_state: None,
            self_loop: SelfLoop::Fold,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero() && self.epsilon <= T::one()) {
            return Err(Error::InvalidEpsilon(self.epsilon.as_f64()));
        }
        if self.tol.is_nan() || self.tol <= T::zero() {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: format!("{} is not positive", self.tol),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                reason: "at least one iteration is required".into(),
            });
        }
        Ok(())
    }

    /// Resolves the reference state for an instance.
    pub fn reference<P: Scalar>(&self, params: &SystemParams<P>) -> Result<State> {
        let (delta, pre_id) = self.ref_state.unwrap_or((params.t_u(), true));
        if delta == 0 || delta > params.delta_max() {
            return Err(Error::StateOutOfRange {
                delta,
                pre_id: pre_id.into(),
            });
        }
        Ok(State::new(delta, pre_id))
    }
}

/// Converged output of a value-iteration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub params: SystemParams<T>,
    /// Optimal long-run average TAoI per slot.
    pub gain: T,
    /// Relative values, zero at the reference state.
    pub h: Vec<T>,
    /// `Q(s, a)` evaluated with the final `h`, indexed `[skip, transmit]`.
    pub q_values: Vec<[T; 2]>,
    pub policy: ActionTable,
    /// `None` when the policy is not threshold-type.
    pub thresholds: Option<Thresholds>,
    pub ref_state: StateIndex,
    pub iters: usize,
    /// Sup-norm change of the relative values in the last iteration.
    pub residual: T,
    /// `max_s |min_a Q(s, a) - gain - h(s)|` for the reported values.
    pub bellman_residual: T,
    pub converged: bool,
    /// Two-action minimizations evaluated in the last iteration.
    pub minimizations_last_iter: usize,
    pub minimizations_total: u64,
}

#[derive(Serialize)]
struct SolutionDoc<'a, T> {
    params: &'a SystemParams<T>,
    gain: T,
    thresholds: Option<&'a Thresholds>,
    policy: &'a ActionTable,
    h: &'a [T],
    iters: usize,
    residual: T,
    bellman_residual: T,
    converged: bool,
}

impl<T: Scalar + Serialize> Solution<T> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SolutionDoc {
            params: &self.params,
            gain: self.gain,
            thresholds: self.thresholds.as_ref(),
            policy: &self.policy,
            h: &self.h,
            iters: self.iters,
            residual: self.residual,
            bellman_residual: self.bellman_residual,
            converged: self.converged,
        })
        .expect("solution serializes")
    }
}

/// Which value-iteration variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rvi,
    #[default]
    Threshold,
}

/// Builds the kernel, uniformizes it and runs the chosen solver.
pub fn solve<T: Scalar>(
    params: &SystemParams<T>,
    cfg: &SolverConfig<T>,
    method: Method,
) -> Result<(UniformizedMdp<T>, Solution<T>)> {
    cfg.validate()?;
    let smdp = build_transitions(params)?;
    let mdp = uniformize_with(&smdp, cfg.epsilon, cfg.self_loop)?;
    let sol = match method {
        Method::Rvi => rvi(&mdp, cfg)?,
        Method::Threshold => rvi_threshold(&mdp, cfg)?,
    };
    Ok((mdp, sol))
}
