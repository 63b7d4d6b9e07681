use thiserror::Error;

/// Errors raised by model construction, solvers, evaluators and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate posterior: Pr(F = {pre_id}) is zero, so Pr(Y | F = {pre_id}) is undefined")]
    DegeneratePosterior { pre_id: u8 },

    #[error("uniformization constant {0} outside (0, 1]")]
    InvalidEpsilon(f64),

    #[error(
        "policy is not threshold-type: transmits at delta {transmit_at} but skips at delta {skip_at} (F = {pre_id})"
    )]
    NonThresholdPolicy {
        pre_id: u8,
        transmit_at: usize,
        skip_at: usize,
    },

    #[error("stationary distribution is not unique: {0}")]
    SingularChain(String),

    #[error("state space of {states} states exceeds the exhaustive-search guard of {guard}")]
    OracleGuard { states: usize, guard: usize },

    #[error("state ({delta}, {pre_id}) outside the policy's state space")]
    StateOutOfRange { delta: usize, pre_id: u8 },

    #[error("policy table has {got} entries, state space has {expected}")]
    PolicySize { got: usize, expected: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
