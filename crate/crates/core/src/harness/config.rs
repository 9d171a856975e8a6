//! Experiment configuration files.
//!
//! Configs are TOML documents written with dotted keys, for example
//!
//! ```toml
//! episodes = 300
//! runs = 20
//! env.kind = "gridworld"
//! env.gridworld.subgoals = [[4, 0], [0, 4]]
//! agent.gamma = 0.99
//! strategy.kind = "bmc"
//! ```
//!
//! An optional `[sweep]` table maps dotted keys to lists of values; the sweep
//! expands into the cartesian product of those lists. See `docs/config.md` for
//! the full key reference.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::envs::{CartPole, CartPoleSpec, Environment, GridWorld, GridWorldSpec, SupplyChain, SupplyChainSpec};
use crate::error::{Error, Result};
use crate::policy::ScheduleSpec;
use crate::tabular::AgentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Gridworld,
    Cartpole,
    Supplychain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    #[serde(default)]
    pub gridworld: GridWorldSpec,
    #[serde(default)]
    pub cartpole: CartPoleSpec,
    #[serde(default)]
    pub supplychain: SupplyChainSpec,
}

impl EnvConfig {
    pub fn build(&self) -> Result<Box<dyn Environment + Send>> {
        Ok(match self.kind {
            EnvKind::Gridworld => Box::new(GridWorld::new(self.gridworld.clone())?),
            EnvKind::Cartpole => Box::new(CartPole::new(self.cartpole.clone())?),
            EnvKind::Supplychain => Box::new(SupplyChain::new(self.supplychain.clone())?),
        })
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            EnvKind::Gridworld => self.gridworld.validate().map_err(|e| e.scoped("gridworld")),
            EnvKind::Cartpole => self.cartpole.validate().map_err(|e| e.scoped("cartpole")),
            EnvKind::Supplychain => self.supplychain.validate().map_err(|e| e.scoped("supplychain")),
        }
    }

    /// What the test curve measures for this domain.
    pub fn metric(&self) -> TestMetric {
        match self.kind {
            EnvKind::Gridworld => TestMetric::StepsToGoal,
            EnvKind::Cartpole => TestMetric::StepsBalanced,
            EnvKind::Supplychain => TestMetric::Return,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMetric {
    /// Greedy-episode length; lower is better.
    StepsToGoal,
    /// Greedy-episode length; higher is better.
    StepsBalanced,
    /// Undiscounted greedy-episode return; higher is better.
    Return,
}

impl TestMetric {
    pub fn lower_is_better(self) -> bool {
        matches!(self, TestMetric::StepsToGoal)
    }

    /// `a` at least as good as `b`.
    pub fn at_least_as_good(self, a: f64, b: f64) -> bool {
        if self.lower_is_better() {
            a <= b
        } else {
            a >= b
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TestMetric::StepsToGoal => "steps to reach the final goal",
            TestMetric::StepsBalanced => "time steps the pole is balanced",
            TestMetric::Return => "return",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestProtocol {
    /// One greedy episode from the reset state.
    SingleEpisode,
    /// Mean over `trials` independent greedy episodes.
    Averaged { trials: usize },
}

impl TestProtocol {
    pub fn trials(self) -> usize {
        match self {
            TestProtocol::SingleEpisode => 1,
            TestProtocol::Averaged { trials } => trials,
        }
    }
}

/// Stop a run once `consecutive` test evaluations in a row reach `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStop {
    pub consecutive: usize,
    pub threshold: f64,
}

fn default_max_steps() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub strategy: ScheduleSpec,
    pub episodes: usize,
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Defaults to a single episode on grid-world and 10 trials elsewhere.
    #[serde(default)]
    pub test: Option<TestProtocol>,
    #[serde(default)]
    pub early_stop: Option<EarlyStop>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid("runs", "must be >= 1"));
        }
        if self.episodes == 0 {
            return Err(Error::invalid("episodes", "must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be >= 1"));
        }
        self.env.validate().map_err(|e| e.scoped("env"))?;
        self.agent.validate().map_err(|e| e.scoped("agent"))?;
        self.strategy.validate().map_err(|e| e.scoped("strategy"))?;
        if self.test_protocol().trials() == 0 {
            return Err(Error::invalid("test.trials", "must be >= 1"));
        }
        if let Some(stop) = self.early_stop {
            if stop.consecutive == 0 {
                return Err(Error::invalid("early_stop.consecutive", "must be >= 1"));
            }
            if !stop.threshold.is_finite() {
                return Err(Error::invalid("early_stop.threshold", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn test_protocol(&self) -> TestProtocol {
        self.test.unwrap_or(match self.env.kind {
            EnvKind::Gridworld => TestProtocol::SingleEpisode,
            _ => TestProtocol::Averaged { trials: 10 },
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table = parse_table(text)?;
        table.remove("sweep");
        Self::from_table(table)
    }

    pub fn from_table(table: Table) -> Result<Self> {
        let config: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| Error::Config(e.to_string()))
}

/// One point of an expanded sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// `key=value` pairs joined by `,`; usable as a directory name.
    pub label: String,
    pub config: ExperimentConfig,
}

/// Expand the `[sweep]` table into one config per grid point. A config
/// without a sweep yields a single point labelled `base`.
pub fn expand_sweep(text: &str) -> Result<Vec<SweepPoint>> {
    let mut base = parse_table(text)?;
    let grid = match base.remove("sweep") {
        None => Table::new(),
        Some(Value::Table(t)) => t,
        Some(_) => return Err(Error::invalid("sweep", "must be a table of dotted keys to value lists")),
    };
    let mut axes = Vec::with_capacity(grid.len());
    for (key, values) in grid {
        match values {
            Value::Array(values) if !values.is_empty() => axes.push((key, values)),
            _ => return Err(Error::invalid(format!("sweep.\"{key}\""), "must be a non-empty list")),
        }
    }
    if axes.is_empty() {
        return Ok(vec![SweepPoint { label: "base".into(), config: ExperimentConfig::from_table(base)? }]);
    }

    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut table = base.clone();
        let mut labels = Vec::with_capacity(axes.len());
        let mut rem = flat;
        for (key, values) in axes.iter().rev() {
            let value = &values[rem % values.len()];
            rem /= values.len();
            set_dotted(&mut table, key, value.clone())?;
            labels.push(format!("{key}={}", value_label(value)));
        }
        labels.reverse();
        let label = labels.join(",");
        let mut config = ExperimentConfig::from_table(table).map_err(|e| match e {
            Error::Invalid { field, reason } => Error::invalid(field, format!("{reason} (sweep point {label})")),
            other => other,
        })?;
        if config.name.is_empty() {
            config.name = label.clone();
        } else {
            config.name = format!("{} [{label}]", config.name);
        }
        points.push(SweepPoint { label, config });
    }
    Ok(points)
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::invalid("sweep", format!("empty key `{key}`")))?;
    let mut cur = table;
    for part in parts {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(Error::invalid(format!("sweep.\"{key}\""), format!("`{part}` is not a table"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        episodes = 5
        runs = 2
        env.kind = "gridworld"
        agent.gamma = 0.99
        agent.learning_rate = { kind = "constant", value = 0.7 }
        agent.q_init = { kind = "uniform", lo = 0.0, hi = 0.1 }
        strategy.kind = "geometric"
        strategy.rho = 0.9
    "#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.max_steps, 200);
        assert_eq!(c.env.gridworld, GridWorldSpec::default());
        assert_eq!(c.test_protocol(), TestProtocol::SingleEpisode);
        assert_eq!(c.strategy, ScheduleSpec::Geometric { rho: 0.9 });
    }

    #[test]
    fn validation_names_field() {
        let bad = BASE.replace("agent.gamma = 0.99", "agent.gamma = 1.5");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("agent.gamma"), "{err}");
        let bad = BASE.replace("strategy.rho = 0.9", "strategy.rho = 0.9\nstrategy.bogus = 1");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let bad = format!("{BASE}\nenv.gridworld.goal = [7, 7]");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("env.gridworld.goal"), "{err}");
    }

    #[test]
    fn sweep_is_cartesian() {
        let text = format!("{BASE}\n[sweep]\n\"strategy.rho\" = [0.85, 0.9, 0.95]\n\"agent.gamma\" = [0.9, 0.99]\n");
        let points = expand_sweep(&text).unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0].label, "agent.gamma=0.9,strategy.rho=0.85");
        assert_eq!(points[5].config.agent.gamma, 0.99);
        assert_eq!(points[5].config.strategy, ScheduleSpec::Geometric { rho: 0.95 });
        let labels: std::collections::BTreeSet<_> = points.iter().map(|p| p.label.clone()).collect();
        assert_eq!(labels.len(), 6);
    }

    #[test]
    fn no_sweep_is_single_point() {
        let points = expand_sweep(BASE).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].label, "base");
    }

    #[test]
    fn sweep_point_validation() {
        let text = format!("{BASE}\n[sweep]\n\"strategy.rho\" = [0.5, 1.5]\n");
        let err = expand_sweep(&text).unwrap_err().to_string();
        assert!(err.contains("strategy.rho") && err.contains("1.5"), "{err}");
    }
}
