//! Cart-pole balancing with a fixed-grid state discretisation.
//!
//! Dynamics are the classic frictionless cart-pole integrated with explicit
//! Euler steps. The four continuous state variables are clamped to fixed
//! ranges and cut into equal-width bins, giving a small discrete state space
//! for tabular agents.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Environment, Step};
use crate::error::{Error, Result};

/// `[x, ẋ, θ, θ̇]`
pub type CartPoleState = [f64; 4];

pub const PUSH_LEFT: usize = 0;
pub const PUSH_RIGHT: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPoleSpec {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub half_length: f64,
    pub force: f64,
    pub timestep: f64,
    /// Failure angle in degrees.
    pub angle_limit_deg: f64,
    pub position_limit: f64,
    /// Initial state components are drawn uniformly from `±init_noise`.
    pub init_noise: f64,
    /// Bins per dimension, `[x, ẋ, θ, θ̇]`.
    pub bins: [usize; 4],
    /// Symmetric clamp range per dimension; angle in radians.
    pub ranges: [f64; 4],
}

impl Default for CartPoleSpec {
    fn default() -> Self {
        let angle_limit_deg = 12.0;
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force: 10.0,
            timestep: 0.02,
            angle_limit_deg,
            position_limit: 2.4,
            init_noise: 0.05,
            bins: [3, 3, 4, 3],
            ranges: [2.4, 3.0, angle_limit_deg.to_radians(), 3.5],
        }
    }
}

impl CartPoleSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gravity", self.gravity),
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("half_length", self.half_length),
            ("force", self.force),
            ("timestep", self.timestep),
            ("angle_limit_deg", self.angle_limit_deg),
            ("position_limit", self.position_limit),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        if !(self.init_noise.is_finite() && self.init_noise >= 0.0) {
            return Err(Error::invalid("init_noise", "must be finite and >= 0"));
        }
        if self.bins.iter().any(|&b| b == 0) {
            return Err(Error::invalid("bins", "every dimension needs at least one bin"));
        }
        if self.ranges.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
            return Err(Error::invalid("ranges", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.bins.iter().product()
    }

    /// One Euler step. Returns the next state and whether the pole fell or the cart left the track.
    pub fn dynamics(&self, s: &CartPoleState, action: usize) -> (CartPoleState, bool) {
        let [x, x_dot, theta, theta_dot] = *s;
        let force = if action == PUSH_RIGHT { self.force } else { -self.force };
        let total_mass = self.cart_mass + self.pole_mass;
        let pole_moment = self.pole_mass * self.half_length;
        let (sin, cos) = theta.sin_cos();

        let temp = (force + pole_moment * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;

        let dt = self.timestep;
        let next = [x + dt * x_dot, x_dot + dt * x_acc, theta + dt * theta_dot, theta_dot + dt * theta_acc];
        let failed = next[0].abs() > self.position_limit || next[2].abs() > self.angle_limit_deg.to_radians();
        (next, failed)
    }

    /// Clamp each dimension, bin it, and combine by mixed radix (first dimension most significant).
    pub fn discretize(&self, s: &CartPoleState) -> usize {
        let mut index = 0;
        for d in 0..4 {
            let n = self.bins[d];
            let r = self.ranges[d];
            let v = s[d].clamp(-r, r);
            let bin = (((v + r) / (2.0 * r)) * n as f64).floor() as usize;
            index = index * n + bin.min(n - 1);
        }
        index
    }
}

#[derive(Debug, Clone)]
pub struct CartPole {
    spec: CartPoleSpec,
    state: CartPoleState,
}

impl CartPole {
    pub fn new(spec: CartPoleSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, state: [0.0; 4] })
    }

    pub fn spec(&self) -> &CartPoleSpec {
        &self.spec
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    pub fn set_state(&mut self, state: CartPoleState) {
        self.state = state;
    }
}

impl Environment for CartPole {
    fn num_states(&self) -> usize {
        self.spec.num_states()
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> usize {
        let noise = self.spec.init_noise;
        for v in &mut self.state {
            *v = if noise > 0.0 { rng.random_range(-noise..noise) } else { 0.0 };
        }
        self.spec.discretize(&self.state)
    }

    fn step(&mut self, action: usize, _rng: &mut dyn RngCore) -> Result<Step> {
        if action > PUSH_RIGHT {
            return Err(Error::OutOfRange { what: "action", index: action, limit: 2 });
        }
        let (next, failed) = self.spec.dynamics(&self.state, action);
        self.state = next;
        Ok(Step { state: self.spec.discretize(&next), reward: 1.0, done: failed })
    }

    fn reward_bounds(&self) -> (f64, f64) {
        (1.0, 1.0)
    }
}
