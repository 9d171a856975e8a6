use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::runner::MetricsRecord;

/// One row of `curve.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Across-run mean and standard error per episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateCurve {
    pub points: Vec<CurvePoint>,
}

impl AggregateCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean of the curve over its last `fraction` of episodes (at least one).
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        let k = ((self.points.len() as f64 * fraction).ceil() as usize).clamp(1, self.points.len().max(1));
        let tail = &self.points[self.points.len().saturating_sub(k)..];
        tail.iter().map(|p| p.mean).sum::<f64>() / tail.len() as f64
    }
}

/// Which record field to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    TestMetric,
    TrainReturn,
    Epsilon,
}

impl Field {
    fn get(self, r: &MetricsRecord) -> f64 {
        match self {
            Field::TestMetric => r.test_metric,
            Field::TrainReturn => r.train_return,
            Field::Epsilon => r.epsilon,
        }
    }
}

/// Aggregate the test metric. See [`aggregate_field`].
pub fn aggregate(records: &[MetricsRecord]) -> AggregateCurve {
    aggregate_field(records, Field::TestMetric)
}

/// Per-episode mean and standard error (sample standard deviation over √n).
///
/// Runs that stopped early carry their last value forward up to the longest
/// run, so all curves share one episode axis.
pub fn aggregate_field(records: &[MetricsRecord], field: Field) -> AggregateCurve {
    let Some(last_episode) = records.iter().map(|r| r.episode).max() else {
        return AggregateCurve::default();
    };
    let mut by_run: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in records {
        by_run.entry(r.run).or_default().insert(r.episode, field.get(r));
    }
    let series: Vec<Vec<Option<f64>>> = by_run
        .values()
        .map(|eps| {
            let mut last = None;
            (0..=last_episode)
                .map(|e| {
                    if let Some(&v) = eps.get(&e) {
                        last = Some(v);
                    }
                    last
                })
                .collect()
        })
        .collect();

    let points = (0..=last_episode)
        .map(|e| {
            let values: Vec<f64> = series.iter().filter_map(|s| s[e]).collect();
            let n = values.len();
            let mean = if n == 0 { f64::NAN } else { values.iter().sum::<f64>() / n as f64 };
            let stderr = if n < 2 {
                0.0
            } else {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
            };
            CurvePoint { episode: e, mean, stderr, n }
        })
        .collect();
    AggregateCurve { points }
}
