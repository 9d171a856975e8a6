//! Adaptive ε for ε-greedy exploration by Bayesian model combination.
//!
//! The exploration rate is the posterior mean weight of a "uniform" return
//! model against a "greedy" one, updated online from expected-SARSA returns.
//! Alongside the adaptive strategy the crate ships fixed ε schedules, a VDBE
//! baseline, tabular TD agents, three benchmark environments and a seeded
//! experiment harness.

pub mod bayes;
pub mod envs;
pub mod error;
pub mod harness;
pub mod policy;
pub mod tabular;

pub use error::{Error, Result};
