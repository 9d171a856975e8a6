//! Tabular temporal-difference agents.
//!
//! Covers ε-greedy action selection, the greedy / uniform / SARSA / expected
//! SARSA bootstraps, the TD update, and the per-episode training loop that
//! drives an [`EpsilonStrategy`].

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::{EpsilonStrategy, StepSignal};

/// Dense `Q(s, a)` table, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    num_states: usize,
    num_actions: usize,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::filled(num_states, num_actions, 0.0)
    }

    pub fn filled(num_states: usize, num_actions: usize, value: f64) -> Self {
        assert!(num_states > 0 && num_actions > 0, "QTable needs at least one state and action");
        Self { values: vec![value; num_states * num_actions], num_states, num_actions }
    }

    pub fn from_init(num_states: usize, num_actions: usize, init: &QInit, rng: &mut dyn RngCore) -> Self {
        let mut q = Self::zeros(num_states, num_actions);
        if let QInit::Uniform { lo, hi } = *init {
            for v in &mut q.values {
                *v = lo + (hi - lo) * rng.random::<f64>();
            }
        }
        q
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_actions == 0 || rows.iter().any(|r| r.len() != num_actions) {
            return Err(Error::invalid("rows", "must be non-empty and rectangular"));
        }
        Ok(Self { values: rows.concat(), num_states: rows.len(), num_actions })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.values[s * self.num_actions + a] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.num_states {
            return Err(Error::OutOfRange { what: "state", index: s, limit: self.num_states });
        }
        if a >= self.num_actions {
            return Err(Error::OutOfRange { what: "action", index: a, limit: self.num_actions });
        }
        Ok(())
    }

    /// `Q(s,a) ← (1 − η)·Q(s,a) + η·target`.
    pub fn td_update(&mut self, s: usize, a: usize, target: f64, eta: f64) -> Result<()> {
        self.check(s, a)?;
        if !target.is_finite() {
            return Err(Error::NonFinite { what: "TD target", value: target });
        }
        let old = self.get(s, a);
        self.set(s, a, old + eta * (target - old));
        Ok(())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy action probabilities for one row of Q-values.
pub fn egreedy_probs(q_row: &[f64], epsilon: f64) -> Vec<f64> {
    let n = q_row.len();
    let explore = epsilon / n as f64;
    let mut probs = vec![explore; n];
    probs[argmax(q_row)] += 1.0 - epsilon;
    probs
}

/// Draw from [`egreedy_probs`]: a uniform action with probability ε, otherwise greedy.
pub fn sample_action<R: Rng + ?Sized>(q_row: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..q_row.len())
    } else {
        argmax(q_row)
    }
}

/// One observed transition `(s, a, r, s', done)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub done: bool,
}

fn bootstrap(q: &QTable, t: &Transition, gamma: f64, value: impl FnOnce(&[f64]) -> f64) -> f64 {
    if t.done {
        t.r
    } else {
        t.r + gamma * value(q.row(t.s_next))
    }
}

/// Greedy (Q-learning) bootstrap `r + γ max_a' Q(s', a')`.
pub fn target_q(q: &QTable, t: &Transition, gamma: f64) -> f64 {
    bootstrap(q, t, gamma, |row| row[argmax(row)])
}

/// Uniform bootstrap `r + γ mean_a' Q(s', a')`.
pub fn target_uniform(q: &QTable, t: &Transition, gamma: f64) -> f64 {
    bootstrap(q, t, gamma, |row| row.iter().sum::<f64>() / row.len() as f64)
}

pub fn target_sarsa(q: &QTable, t: &Transition, a_next: usize, gamma: f64) -> f64 {
    bootstrap(q, t, gamma, |row| row[a_next])
}

/// Expected SARSA bootstrap under the ε-greedy policy at `s'`.
pub fn target_expected_sarsa(q: &QTable, t: &Transition, epsilon: f64, gamma: f64) -> f64 {
    bootstrap(q, t, gamma, |row| {
        egreedy_probs(row, epsilon).iter().zip(row).map(|(p, v)| p * v).sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapVariant {
    QLearning,
    Sarsa,
    ExpectedSarsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QInit {
    #[default]
    Zeros,
    Uniform { lo: f64, hi: f64 },
}

/// Learning rate as a function of the episode number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearningRate {
    Constant { value: f64 },
    /// `max(initial · decay^t, min)`
    Geometric { initial: f64, decay: f64, min: f64 },
}

impl LearningRate {
    pub fn at(&self, episode: u64) -> f64 {
        match *self {
            LearningRate::Constant { value } => value,
            LearningRate::Geometric { initial, decay, min } => (initial * decay.powf(episode as f64)).max(min),
        }
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        match *self {
            LearningRate::Constant { value } if !in_unit(value) => {
                Err(Error::invalid("value", "must lie in (0, 1]"))
            }
            LearningRate::Geometric { initial, .. } if !in_unit(initial) => {
                Err(Error::invalid("initial", "must lie in (0, 1]"))
            }
            LearningRate::Geometric { decay, .. } if !(decay > 0.0 && decay <= 1.0) => {
                Err(Error::invalid("decay", "must lie in (0, 1]"))
            }
            LearningRate::Geometric { min, .. } if !in_unit(min) => Err(Error::invalid("min", "must lie in (0, 1]")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub learning_rate: LearningRate,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: BootstrapVariant,
    #[serde(default)]
    pub q_init: QInit,
}

fn default_bootstrap() -> BootstrapVariant {
    BootstrapVariant::ExpectedSarsa
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma", format!("must lie in (0, 1), got {}", self.gamma)));
        }
        self.learning_rate.validate().map_err(|e| e.scoped("learning_rate"))?;
        if let QInit::Uniform { lo, hi } = self.q_init {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid("q_init", "uniform bounds must be finite with lo <= hi"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    /// Undiscounted sum of rewards.
    pub ret: f64,
    pub steps: usize,
    pub done: bool,
    /// ε after the last update of the episode.
    pub epsilon: f64,
}

/// One training episode: ε-greedy interaction, TD update with the configured
/// bootstrap, and a strategy update per step fed with the expected-SARSA return.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    env: &mut dyn Environment,
    q: &mut QTable,
    strategy: &mut EpsilonStrategy,
    config: &AgentConfig,
    episode: u64,
    max_steps: usize,
    env_rng: &mut dyn RngCore,
    agent_rng: &mut dyn RngCore,
) -> Result<EpisodeStats> {
    if max_steps == 0 {
        return Err(Error::invalid("max_steps", "must be >= 1"));
    }
    strategy.begin_episode(episode);
    let eta = config.learning_rate.at(episode);
    let gamma = config.gamma;

    let mut s = env.reset(env_rng);
    let mut pending: Option<usize> = None;
    let mut stats = EpisodeStats { ret: 0.0, steps: 0, done: false, epsilon: strategy.epsilon() };

    while stats.steps < max_steps {
        let epsilon = strategy.epsilon();
        let a = pending.take().unwrap_or_else(|| sample_action(q.row(s), epsilon, agent_rng));
        let step = env.step(a, env_rng)?;
        let t = Transition { s, a, r: step.reward, s_next: step.state, done: step.done };

        let g_q = target_q(q, &t, gamma);
        let g_u = target_uniform(q, &t, gamma);
        let g_exp = target_expected_sarsa(q, &t, epsilon, gamma);
        let target = match config.bootstrap {
            BootstrapVariant::ExpectedSarsa => g_exp,
            BootstrapVariant::QLearning => g_q,
            BootstrapVariant::Sarsa => {
                let a_next = sample_action(q.row(t.s_next), epsilon, agent_rng);
                if !t.done {
                    pending = Some(a_next);
                }
                target_sarsa(q, &t, a_next, gamma)
            }
        };
        let td_error = target - q.get(s, a);
        q.td_update(s, a, target, eta)?;
        strategy.observe(&StepSignal { g_q, g_u, g_exp, td_error })?;

        stats.ret += step.reward;
        stats.steps += 1;
        if step.done {
            stats.done = true;
            break;
        }
        s = step.state;
    }
    stats.epsilon = strategy.epsilon();
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutStats {
    pub ret: f64,
    pub steps: usize,
    pub done: bool,
}

/// Evaluation episode acting greedily (ε = 0) without learning.
pub fn greedy_rollout(
    env: &mut dyn Environment,
    q: &QTable,
    rng: &mut dyn RngCore,
    max_steps: usize,
) -> Result<RolloutStats> {
    let mut s = env.reset(rng);
    let mut out = RolloutStats { ret: 0.0, steps: 0, done: false };
    while out.steps < max_steps {
        let step = env.step(argmax(q.row(s)), rng)?;
        out.ret += step.reward;
        out.steps += 1;
        if step.done {
            out.done = true;
            break;
        }
        s = step.state;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q_next(row: &[f64]) -> (QTable, Transition) {
        let q = QTable::from_rows(&[vec![0.0; row.len()], row.to_vec()]).unwrap();
        (q, Transition { s: 0, a: 0, r: 0.0, s_next: 1, done: false })
    }

    #[test]
    fn egreedy_examples() {
        let p = egreedy_probs(&[4.0, 1.0, 2.0, 3.0], 0.2);
        for (got, want) in p.iter().zip([0.85, 0.05, 0.05, 0.05]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(egreedy_probs(&[1.0, 9.0, 2.0, 3.0], 1.0), vec![0.25; 4]);
        assert_eq!(egreedy_probs(&[1.0, 9.0, 2.0], 0.0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0; 5]), 0);
    }

    #[test]
    fn greedy_sampling_at_zero_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| sample_action(&[0.0, 2.0, 1.0], 0.0, &mut rng) == 1));
    }

    #[test]
    fn sampling_is_seeded() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample_action(&[0.0, 1.0, 0.5, 0.2], 0.5, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn greedy_target() {
        let (q, mut t) = q_next(&[1.0, 2.0, 3.0, 4.0]);
        t.done = true;
        t.r = 1.0;
        assert_eq!(target_q(&q, &t, 0.5), 1.0);
        t.done = false;
        t.r = 0.0;
        assert_eq!(target_q(&q, &t, 0.5), 2.0);
        t.r = 0.3;
        assert_eq!(target_q(&q, &t, 0.0), 0.3);
    }

    #[test]
    fn uniform_target() {
        let (q, mut t) = q_next(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(target_uniform(&q, &t, 1.0), 2.5);
        t.done = true;
        t.r = -0.1;
        assert_eq!(target_uniform(&q, &t, 1.0), -0.1);
        let (flat, t) = q_next(&[1.5; 3]);
        assert_eq!(target_uniform(&flat, &t, 0.9), target_q(&flat, &t, 0.9));
    }

    #[test]
    fn sarsa_target() {
        let (q, mut t) = q_next(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(target_sarsa(&q, &t, 3, 0.5), target_q(&q, &t, 0.5));
        t.r = 1.0;
        assert_eq!(target_sarsa(&q, &t, 1, 0.5), 2.0);
        assert_eq!(target_sarsa(&q, &t, 1, 0.0), 1.0);
    }

    #[test]
    fn expected_sarsa_target() {
        let (q, t) = q_next(&[1.0, 2.0, 3.0, 4.0]);
        assert!((target_expected_sarsa(&q, &t, 0.5, 1.0) - 3.25).abs() < 1e-12);
        assert_eq!(target_expected_sarsa(&q, &t, 0.0, 0.7), target_q(&q, &t, 0.7));
    }

    #[test]
    fn td_update_rule() {
        let mut q = QTable::zeros(2, 2);
        q.td_update(1, 0, 2.0, 0.7).unwrap();
        assert!((q.get(1, 0) - 1.4).abs() < 1e-15);
        assert_eq!(q.values().iter().filter(|&&v| v != 0.0).count(), 1);
        q.td_update(0, 1, 5.0, 1.0).unwrap();
        assert_eq!(q.get(0, 1), 5.0);
        let before = q.clone();
        q.td_update(1, 0, q.get(1, 0), 0.3).unwrap();
        assert_eq!(q, before);
        assert!(q.td_update(2, 0, 1.0, 0.5).is_err());
        assert!(q.td_update(0, 2, 1.0, 0.5).is_err());
    }

    #[test]
    fn learning_rate_schedules() {
        let lr = LearningRate::Geometric { initial: 0.5, decay: 0.99, min: 0.01 };
        assert_eq!(lr.at(0), 0.5);
        assert!((lr.at(1) - 0.495).abs() < 1e-15);
        assert_eq!(lr.at(10_000), 0.01);
        assert_eq!(LearningRate::Constant { value: 0.7 }.at(99), 0.7);
    }

    #[test]
    fn agent_config_validation() {
        let ok = AgentConfig {
            gamma: 0.99,
            learning_rate: LearningRate::Constant { value: 0.7 },
            bootstrap: BootstrapVariant::ExpectedSarsa,
            q_init: QInit::Zeros,
        };
        assert!(ok.validate().is_ok());
        let bad = AgentConfig { gamma: 1.0, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = AgentConfig { learning_rate: LearningRate::Constant { value: 0.0 }, ..ok };
        assert!(bad.validate().unwrap_err().to_string().contains("learning_rate.value"));
    }
}
