//! Cooperation dynamics toolkit.
//!
//! - [`ipd`]: two-player iterated prisoner's dilemma with payoff regimes,
//!   memory-one strategies, a turn-taking alternator, and the stick/deviate
//!   discount analysis for the alternating agreement.
//! - [`mfg`]: a discrete-time mean-field game for an N-vehicle intersection,
//!   solved by damped fixed-point iteration between a forward distribution
//!   flow and backward Bellman induction under a SoftMax policy.
//! - [`roles`]: role rotation (deterministic memory windows and stochastic
//!   sigmoid switching) plus delayed group-reward crediting.
//! - [`harness`]: configuration-driven experiments, abstract environments,
//!   CSV and report emission. The `coopdyn` binary is a thin front end over it.

pub mod csvio;
pub mod error;
pub mod harness;
pub mod ipd;
pub mod mfg;
pub mod roles;

pub use error::{Error, Result};
