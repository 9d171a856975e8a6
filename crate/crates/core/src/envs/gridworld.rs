//! Deterministic grid-world navigation with ordered sub-goals.
//!
//! The agent walks a `width × height` grid, must visit each sub-goal cell in
//! the listed order, and then reach the final goal. Valid moves cost
//! `valid_cost`, bumping into the border costs `invalid_cost` and leaves the
//! agent in place. The observation index encodes the position together with a
//! bit mask of collected sub-goals.

use std::collections::VecDeque;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{Environment, Step};
use crate::error::{Error, Result};

pub type Cell = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridWorldSpec {
    pub width: usize,
    pub height: usize,
    /// `[x, y]`, with `y = 0` the top row.
    pub start: Cell,
    /// Visited in this order.
    pub subgoals: Vec<Cell>,
    pub goal: Cell,
    pub valid_cost: f64,
    pub invalid_cost: f64,
    /// Extra reward on completing the task; zero by default.
    pub goal_reward: f64,
}

impl Default for GridWorldSpec {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            start: [0, 0],
            subgoals: vec![[4, 0], [0, 4]],
            goal: [4, 4],
            valid_cost: 0.1,
            invalid_cost: 0.2,
            goal_reward: 0.0,
        }
    }
}

/// Moves: up, down, left, right.
pub const NUM_ACTIONS: usize = 4;

impl GridWorldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("width", "grid must be at least 1x1"));
        }
        if self.subgoals.len() > 16 {
            return Err(Error::invalid("subgoals", "at most 16 sub-goals are supported"));
        }
        let inside = |c: &Cell| c[0] < self.width && c[1] < self.height;
        if !inside(&self.start) {
            return Err(Error::invalid("start", "cell lies outside the grid"));
        }
        if !inside(&self.goal) {
            return Err(Error::invalid("goal", "cell lies outside the grid"));
        }
        if let Some(i) = self.subgoals.iter().position(|c| !inside(c)) {
            return Err(Error::invalid(format!("subgoals[{i}]"), "cell lies outside the grid"));
        }
        for (name, v) in [("valid_cost", self.valid_cost), ("invalid_cost", self.invalid_cost), ("goal_reward", self.goal_reward)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    fn num_flag_masks(&self) -> usize {
        1 << self.subgoals.len()
    }

    fn full_mask(&self) -> usize {
        self.num_flag_masks() - 1
    }

    pub fn num_states(&self) -> usize {
        self.width * self.height * self.num_flag_masks()
    }

    /// `position × 2^(#subgoals) + flags`, with `position = y·width + x`.
    pub fn encode(&self, cell: Cell, flags: usize) -> usize {
        (cell[1] * self.width + cell[0]) * self.num_flag_masks() + flags
    }

    pub fn decode(&self, state: usize) -> (Cell, usize) {
        let masks = self.num_flag_masks();
        let pos = state / masks;
        ([pos % self.width, pos / self.width], state % masks)
    }

    /// Pure transition function. Returns `(next_state, reward, done)`.
    pub fn transition(&self, state: usize, action: usize) -> (usize, f64, bool) {
        let (cell, mut flags) = self.decode(state);
        let [x, y] = cell;
        let target = match action {
            0 => y.checked_sub(1).map(|y| [x, y]),
            1 => (y + 1 < self.height).then_some([x, y + 1]),
            2 => x.checked_sub(1).map(|x| [x, y]),
            3 => (x + 1 < self.width).then_some([x + 1, y]),
            _ => None,
        };
        let Some(next) = target else {
            return (state, -self.invalid_cost, false);
        };
        let collected = flags.count_ones() as usize;
        if collected < self.subgoals.len() && self.subgoals[collected] == next && flags == (1 << collected) - 1 {
            flags |= 1 << collected;
        }
        let done = next == self.goal && flags == self.full_mask();
        let reward = if done { self.goal_reward - self.valid_cost } else { -self.valid_cost };
        (self.encode(next, flags), reward, done)
    }

    pub fn start_state(&self) -> usize {
        let mut flags = 0;
        if self.subgoals.first() == Some(&self.start) {
            flags = 1;
        }
        self.encode(self.start, flags)
    }

    fn is_complete(&self, state: usize) -> bool {
        let (cell, flags) = self.decode(state);
        cell == self.goal && flags == self.full_mask()
    }
}

/// Fewest moves from the start to completion, by breadth-first search over
/// `(position, flags)`. `None` if the task cannot be completed.
pub fn bfs_optimal_steps(spec: &GridWorldSpec) -> Option<usize> {
    let start = spec.start_state();
    if spec.is_complete(start) {
        return Some(0);
    }
    let mut dist = vec![usize::MAX; spec.num_states()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for a in 0..NUM_ACTIONS {
            let (next, _, done) = spec.transition(s, a);
            if dist[next] != usize::MAX {
                continue;
            }
            dist[next] = dist[s] + 1;
            if done {
                return Some(dist[next]);
            }
            queue.push_back(next);
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    spec: GridWorldSpec,
    state: usize,
}

impl GridWorld {
    pub fn new(spec: GridWorldSpec) -> Result<Self> {
        spec.validate()?;
        let state = spec.start_state();
        Ok(Self { spec, state })
    }

    pub fn spec(&self) -> &GridWorldSpec {
        &self.spec
    }

    pub fn state(&self) -> usize {
        self.state
    }
}

impl Environment for GridWorld {
    fn num_states(&self) -> usize {
        self.spec.num_states()
    }

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.state = self.spec.start_state();
        self.state
    }

    fn step(&mut self, action: usize, _rng: &mut dyn RngCore) -> Result<Step> {
        if action >= NUM_ACTIONS {
            return Err(Error::OutOfRange { what: "action", index: action, limit: NUM_ACTIONS });
        }
        let (state, reward, done) = self.spec.transition(self.state, action);
        self.state = state;
        Ok(Step { state, reward, done })
    }

    fn reward_bounds(&self) -> (f64, f64) {
        let lo = (-self.spec.valid_cost).min(-self.spec.invalid_cost);
        let hi = (-self.spec.valid_cost).max(-self.spec.invalid_cost);
        let done = self.spec.goal_reward - self.spec.valid_cost;
        (lo.min(done), hi.max(done))
    }
}
