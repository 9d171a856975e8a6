//! Python bindings for `ebmc`.
//!
//! Build with `maturin develop -m crates/py/Cargo.toml` and `import ebmc_py`.

use ebmc::bayes::{self, GammaPosterior, NormalGammaPrior, StudentTParams};
use ebmc::envs::{bfs_optimal_steps, GridWorldSpec};
use ebmc::harness::{self, ExperimentConfig, MetricsRecord};
use ebmc::policy::{self, BetaWeight, BmcStep, ScheduleSpec, VdbeState};
use ebmc::tabular::{self, QTable, Transition};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: ebmc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn prior(mu0: f64, tau0: f64, a0: f64, b0: f64) -> PyResult<NormalGammaPrior> {
    NormalGammaPrior::new(mu0, tau0, a0, b0).map_err(py_err)
}

/// Online count, mean and population variance.
#[pyclass(name = "RunningMoments", from_py_object)]
#[derive(Clone, Default)]
struct PyRunningMoments {
    inner: bayes::RunningMoments,
}

#[pymethods]
impl PyRunningMoments {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    fn update(&mut self, x: f64) -> PyResult<()> {
        self.inner.update(x).map_err(py_err)
    }

    #[getter]
    fn count(&self) -> u64 {
        self.inner.count
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean
    }

    #[getter]
    fn variance(&self) -> f64 {
        self.inner.variance()
    }
}

/// Posterior `(a, b)` of the return precision.
#[pyfunction]
#[pyo3(signature = (moments, mu0 = 0.0, tau0 = 1.0, a0 = 500.0, b0 = 500.0))]
fn gamma_posterior(moments: &PyRunningMoments, mu0: f64, tau0: f64, a0: f64, b0: f64) -> PyResult<(f64, f64)> {
    let post = bayes::gamma_posterior(&prior(mu0, tau0, a0, b0)?, &moments.inner);
    Ok((post.a, post.b))
}

#[pyfunction]
fn student_t_log_density(x: f64, location: f64, precision: f64, dof: f64) -> PyResult<f64> {
    let p = StudentTParams::new(location, precision, dof).map_err(py_err)?;
    Ok(bayes::student_t_log_density(&p, x))
}

/// Predictive density of return `d` under a model whose bootstrap is `g`.
#[pyfunction]
fn model_evidence(g: f64, a: f64, b: f64, d: f64) -> f64 {
    bayes::model_evidence(g, &GammaPosterior { a, b }, d)
}

/// One moment-matched update of `Beta(alpha, beta)`; `None` when skipped.
#[pyfunction]
fn moment_match(alpha: f64, beta: f64, e_u: f64, e_q: f64) -> Option<(f64, f64)> {
    BetaWeight { alpha, beta }.moment_match(e_u, e_q).map(|w| (w.alpha, w.beta))
}

#[pyclass(name = "BmcState")]
struct PyBmcState {
    inner: policy::BmcState,
}

#[pymethods]
impl PyBmcState {
    #[new]
    #[pyo3(signature = (alpha0, beta0, eps_min = 0.0, mu0 = 0.0, tau0 = 1.0, a0 = 500.0, b0 = 500.0))]
    fn new(alpha0: f64, beta0: f64, eps_min: f64, mu0: f64, tau0: f64, a0: f64, b0: f64) -> PyResult<Self> {
        let inner = policy::BmcState::new(prior(mu0, tau0, a0, b0)?, alpha0, beta0, eps_min).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.weight.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.weight.beta
    }

    /// Returns `False` when the weight update was skipped.
    fn update(&mut self, g_q: f64, g_u: f64, d: f64) -> PyResult<bool> {
        Ok(self.inner.update(g_q, g_u, d).map_err(py_err)? == BmcStep::Updated)
    }
}

/// Fixed schedule value; `kind` is `constant` (value = c), `geometric` (rho) or `power` (exponent).
#[pyfunction]
fn schedule_epsilon(kind: &str, value: f64, episode: u64) -> PyResult<f64> {
    let spec = match kind {
        "constant" => ScheduleSpec::Constant { c: value },
        "geometric" => ScheduleSpec::Geometric { rho: value },
        "power" => ScheduleSpec::Power { exponent: value },
        other => return Err(PyValueError::new_err(format!("unknown schedule kind `{other}`"))),
    };
    spec.validate().map_err(py_err)?;
    policy::schedule_epsilon(&spec, episode).map_err(py_err)
}

#[pyfunction]
fn vdbe_update(epsilon: f64, td_error: f64, sigma: f64, delta: f64) -> f64 {
    VdbeState { epsilon }.update(td_error, sigma, delta).epsilon
}

#[pyfunction]
fn egreedy_probs(row: Vec<f64>, epsilon: f64) -> PyResult<Vec<f64>> {
    if row.is_empty() {
        return Err(PyValueError::new_err("row must not be empty"));
    }
    Ok(tabular::egreedy_probs(&row, epsilon))
}

fn one_step(reward: f64, next_row: Vec<f64>, done: bool) -> PyResult<(QTable, Transition)> {
    if next_row.is_empty() {
        return Err(PyValueError::new_err("next_row must not be empty"));
    }
    let q = QTable::from_rows(&[next_row]).map_err(py_err)?;
    Ok((q, Transition { s: 0, a: 0, r: reward, s_next: 0, done }))
}

#[pyfunction]
#[pyo3(signature = (reward, next_row, gamma, done = false))]
fn target_q(reward: f64, next_row: Vec<f64>, gamma: f64, done: bool) -> PyResult<f64> {
    let (q, t) = one_step(reward, next_row, done)?;
    Ok(tabular::target_q(&q, &t, gamma))
}

#[pyfunction]
#[pyo3(signature = (reward, next_row, gamma, done = false))]
fn target_uniform(reward: f64, next_row: Vec<f64>, gamma: f64, done: bool) -> PyResult<f64> {
    let (q, t) = one_step(reward, next_row, done)?;
    Ok(tabular::target_uniform(&q, &t, gamma))
}

#[pyfunction]
#[pyo3(signature = (reward, next_row, epsilon, gamma, done = false))]
fn target_expected_sarsa(reward: f64, next_row: Vec<f64>, epsilon: f64, gamma: f64, done: bool) -> PyResult<f64> {
    let (q, t) = one_step(reward, next_row, done)?;
    Ok(tabular::target_expected_sarsa(&q, &t, epsilon, gamma))
}

/// Shortest completion length of the default grid-world, or of one given by its fields.
#[pyfunction]
#[pyo3(signature = (width = 5, height = 5, start = [0, 0], subgoals = None, goal = [4, 4]))]
fn gridworld_optimal_steps(
    width: usize,
    height: usize,
    start: [usize; 2],
    subgoals: Option<Vec<[usize; 2]>>,
    goal: [usize; 2],
) -> PyResult<Option<usize>> {
    let mut spec = GridWorldSpec { width, height, start, goal, ..Default::default() };
    if let Some(s) = subgoals {
        spec.subgoals = s;
    }
    spec.validate().map_err(py_err)?;
    Ok(bfs_optimal_steps(&spec))
}

type RecordTuple = (usize, usize, f64, usize, f64, f64);

fn to_tuple(r: &MetricsRecord) -> RecordTuple {
    (r.run, r.episode, r.train_return, r.train_steps, r.test_metric, r.epsilon)
}

fn from_tuple(t: &RecordTuple) -> MetricsRecord {
    MetricsRecord { run: t.0, episode: t.1, train_return: t.2, train_steps: t.3, test_metric: t.4, epsilon: t.5 }
}

/// Run an experiment from TOML text. Returns
/// `(run, episode, train_return, train_steps, test_metric, epsilon)` rows.
#[pyfunction]
#[pyo3(signature = (config_toml, parallelism = 1))]
fn run_experiment(py: Python<'_>, config_toml: &str, parallelism: usize) -> PyResult<Vec<RecordTuple>> {
    let config = ExperimentConfig::from_toml_str(config_toml).map_err(py_err)?;
    let records = py.detach(|| harness::run_experiment(&config, parallelism)).map_err(py_err)?;
    Ok(records.iter().map(to_tuple).collect())
}

/// Per-episode `(episode, mean, stderr, n)` of the test metric.
#[pyfunction]
fn aggregate(records: Vec<RecordTuple>) -> Vec<(usize, f64, f64, usize)> {
    let records: Vec<_> = records.iter().map(from_tuple).collect();
    harness::aggregate(&records).points.iter().map(|p| (p.episode, p.mean, p.stderr, p.n)).collect()
}

#[pyfunction]
fn records_csv(records: Vec<RecordTuple>) -> PyResult<String> {
    let records: Vec<_> = records.iter().map(from_tuple).collect();
    let bytes = harness::records_csv(&records).map_err(py_err)?;
    String::from_utf8(bytes).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn ebmc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRunningMoments>()?;
    m.add_class::<PyBmcState>()?;
    m.add_function(wrap_pyfunction!(gamma_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(student_t_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(model_evidence, m)?)?;
    m.add_function(wrap_pyfunction!(moment_match, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(vdbe_update, m)?)?;
    m.add_function(wrap_pyfunction!(egreedy_probs, m)?)?;
    m.add_function(wrap_pyfunction!(target_q, m)?)?;
    m.add_function(wrap_pyfunction!(target_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(target_expected_sarsa, m)?)?;
    m.add_function(wrap_pyfunction!(gridworld_optimal_steps, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(records_csv, m)?)?;
    Ok(())
}
