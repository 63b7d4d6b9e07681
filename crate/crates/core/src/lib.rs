//! Task-oriented age of information (TAoI) for a remote monitoring loop.
//!
//! A sensor captures one image per decision step, a lightweight classifier
//! pre-identifies it, and the receiver decides whether to pull the image
//! over a link that takes `t_u` slots. The TAoI resets to `t_u` only when a
//! transmitted image is a true target. This crate models the loop as a
//! semi-Markov decision process, solves for the average-TAoI optimal policy
//! by uniformization and relative value iteration, checks the structure of
//! the result, and evaluates policies exactly and by slot-level simulation.
//!
//! The numeric core is generic over [`Scalar`]; the aliases below fix it to
//! `f64`.

pub mod cli;
pub mod error;
pub mod kernel;
pub mod model;
pub mod policies;
pub mod scalar;
pub mod simulator;
pub mod solver;
mod stationary;

pub use error::{Error, Result};
pub use kernel::{SelfLoop, StateIndex, StateSpace};
pub use model::{Action, State};
pub use policies::{ActionTable, PolicyKind, Threshold, Thresholds};
pub use scalar::Scalar;
pub use solver::Method;

pub type SystemParams = model::SystemParams<f64>;
pub type DerivedProbs = model::DerivedProbs<f64>;
pub type EmbeddedSmdp = kernel::EmbeddedSmdp<f64>;
pub type UniformizedMdp = kernel::UniformizedMdp<f64>;
pub type TransitionRow = kernel::TransitionRow<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type Solution = solver::Solution<f64>;
pub type PolicyValue = solver::PolicyValue<f64>;
pub type LemmaReport = solver::LemmaReport<f64>;
pub type OracleResult = solver::OracleResult<f64>;
