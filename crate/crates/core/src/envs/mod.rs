//! Benchmark environments behind a common episodic interface.

pub mod cartpole;
pub mod gridworld;
pub mod supply_chain;

use rand::RngCore;

use crate::error::Result;

pub use cartpole::{CartPole, CartPoleSpec, CartPoleState};
pub use gridworld::{bfs_optimal_steps, GridWorld, GridWorldSpec};
pub use supply_chain::{DemandModel, SupplyChain, SupplyChainSpec};

/// Result of one environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub reward: f64,
    /// The episode reached an absorbing state. Time limits are not terminal.
    pub done: bool,
}

/// A discrete-index episodic MDP as seen by a tabular agent.
pub trait Environment {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn reset(&mut self, rng: &mut dyn RngCore) -> usize;
    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Step>;
    /// Closed interval containing every reward this environment can emit.
    fn reward_bounds(&self) -> (f64, f64);
}
