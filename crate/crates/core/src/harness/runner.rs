//! Seeded multi-run execution of the train / test protocol.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TestMetric};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::EpsilonStrategy;
use crate::tabular::{greedy_rollout, run_episode, QTable};

/// One row of `records.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run: usize,
    pub episode: usize,
    pub train_return: f64,
    pub train_steps: usize,
    pub test_metric: f64,
    pub epsilon: f64,
}

/// Independent random streams of a single run, all derived from `base_seed + run`.
pub struct RunRngs {
    pub init: ChaCha8Rng,
    pub env: ChaCha8Rng,
    pub agent: ChaCha8Rng,
    pub test: ChaCha8Rng,
}

impl RunRngs {
    pub fn new(seed: u64) -> Self {
        let stream = |k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Self { init: stream(0), env: stream(1), agent: stream(2), test: stream(3) }
    }
}

pub fn run_seed(config: &ExperimentConfig, run: usize) -> u64 {
    config.base_seed.wrapping_add(run as u64)
}

fn test_metric(
    env: &mut dyn Environment,
    q: &QTable,
    config: &ExperimentConfig,
    metric: TestMetric,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let trials = config.test_protocol().trials();
    let mut total = 0.0;
    for _ in 0..trials {
        let out = greedy_rollout(env, q, rng, config.max_steps)?;
        total += match metric {
            TestMetric::StepsToGoal | TestMetric::StepsBalanced => out.steps as f64,
            TestMetric::Return => out.ret,
        };
    }
    Ok(total / trials as f64)
}

/// Train and test one run. Records stop early if the early-stop rule fires.
pub fn run_single(config: &ExperimentConfig, run: usize) -> Result<Vec<MetricsRecord>> {
    let mut rngs = RunRngs::new(run_seed(config, run));
    let mut env = config.env.build()?;
    let mut test_env = config.env.build()?;
    let metric = config.env.metric();
    let mut q = QTable::from_init(env.num_states(), env.num_actions(), &config.agent.q_init, &mut rngs.init);
    let mut strategy = EpsilonStrategy::from_spec(&config.strategy, env.num_actions())?;

    let mut records = Vec::with_capacity(config.episodes);
    let mut streak = 0;
    for episode in 0..config.episodes {
        let stats = run_episode(
            env.as_mut(),
            &mut q,
            &mut strategy,
            &config.agent,
            episode as u64,
            config.max_steps,
            &mut rngs.env,
            &mut rngs.agent,
        )?;
        let test = test_metric(test_env.as_mut(), &q, config, metric, &mut rngs.test)?;
        records.push(MetricsRecord {
            run,
            episode,
            train_return: stats.ret,
            train_steps: stats.steps,
            test_metric: test,
            epsilon: stats.epsilon,
        });
        if let Some(stop) = config.early_stop {
            streak = if metric.at_least_as_good(test, stop.threshold) { streak + 1 } else { 0 };
            if streak >= stop.consecutive {
                break;
            }
        }
    }
    Ok(records)
}

/// Execute every run of `config` on a pool of `parallelism` workers.
/// Output order is by run, then episode, regardless of the pool size.
pub fn run_experiment(config: &ExperimentConfig, parallelism: usize) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::invalid("parallelism", e.to_string()))?;
    let per_run: Vec<Result<Vec<MetricsRecord>>> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| {
                run_single(config, run).map_err(|e| Error::Run { run, seed: run_seed(config, run), source: Box::new(e) })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(config.runs * config.episodes);
    for run in per_run {
        out.extend(run?);
    }
    Ok(out)
}
