//! Strategies that produce the exploration rate ε.
//!
//! [`BmcState`] adapts ε online by Bayesian model combination of a greedy and
//! a uniform return model: the mixture weight carries a Beta posterior which is
//! refreshed after each observed return by matching its first two moments.
//! The fixed schedules and the VDBE baseline live alongside it so the training
//! loop can treat every strategy through [`EpsilonStrategy`].

use serde::{Deserialize, Serialize};

use crate::bayes::{gamma_posterior, model_log_evidence, NormalGammaPrior, RunningMoments};
use crate::error::{Error, Result};

/// Matched variance below this is treated as a collapsed posterior.
const MIN_MATCHED_VARIANCE: f64 = 1e-300;

/// `Beta(alpha, beta)` belief over the weight of the uniform model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaWeight {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaWeight {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha0", alpha), ("beta0", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// One moment-matched Bayes step given the (unnormalised) evidences of the
    /// uniform and greedy models.
    ///
    /// The exact posterior `(e_u·w + e_q·(1−w))·Beta(w | α, β)` is replaced by the
    /// Beta with the same mean and second moment. Returns `None` when the step
    /// carries no information: both evidences vanish, or the matched variance
    /// collapses.
    pub fn moment_match(&self, e_u: f64, e_q: f64) -> Option<BetaWeight> {
        let (a, b) = (self.alpha, self.beta);
        let norm = e_u * a + e_q * b;
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        // Posterior mixture weights of the Beta(a+1, b) and Beta(a, b+1) components.
        let p = e_u * a / norm;
        let q = e_q * b / norm;
        let s = a + b;
        // With m = (a+p)/(s+1) and E[w²] = (a+1)(a+2p)/((s+1)(s+2)), the matched
        // concentration r = (m − E[w²])/(E[w²] − m²) reduces to (s+1)·n/(n + pq(s+2)),
        // where n = q·a(b+1) + p·b(a+1). Every term is non-negative, so nothing cancels.
        let n = q * a * (b + 1.0) + p * b * (a + 1.0);
        let d = n + p * q * (s + 2.0);
        let spread = d / ((s + 1.0) * (s + 1.0) * (s + 2.0));
        if !(spread > MIN_MATCHED_VARIANCE) {
            return None;
        }
        let k = n / d;
        if !(k.is_finite() && k > 0.0) {
            return None;
        }
        let next = BetaWeight { alpha: (a + p) * k, beta: (b + q) * k };
        (next.alpha > 0.0 && next.beta > 0.0).then_some(next)
    }

    /// [`BetaWeight::moment_match`] on log-evidences. The larger one is shifted to
    /// zero before exponentiating; the update is homogeneous of degree zero in the
    /// evidences, so the shift changes nothing but the range.
    pub fn moment_match_log(&self, log_e_u: f64, log_e_q: f64) -> Option<BetaWeight> {
        let top = log_e_u.max(log_e_q);
        if !top.is_finite() {
            return None;
        }
        self.moment_match((log_e_u - top).exp(), (log_e_q - top).exp())
    }
}

/// Outcome of a single [`BmcState::update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmcStep {
    Updated,
    /// Moments advanced but the weight was left as is.
    Skipped,
}

/// Full ε-BMC state: weight posterior, return moments, prior and ε floor.
#[derive(Debug, Clone, PartialEq)]
pub struct BmcState {
    pub weight: BetaWeight,
    pub moments: RunningMoments,
    pub prior: NormalGammaPrior,
    pub eps_min: f64,
}

impl BmcState {
    pub fn new(prior: NormalGammaPrior, alpha0: f64, beta0: f64, eps_min: f64) -> Result<Self> {
        prior.validate()?;
        let weight = BetaWeight::new(alpha0, beta0)?;
        if !(0.0..1.0).contains(&eps_min) {
            return Err(Error::invalid("eps_min", format!("must lie in [0, 1), got {eps_min}")));
        }
        Ok(Self { weight, moments: RunningMoments::new(), prior, eps_min })
    }

    /// Posterior mean of the weight, floored at `eps_min`.
    pub fn epsilon(&self) -> f64 {
        self.weight.mean().max(self.eps_min)
    }

    /// Absorb the observed return `d` given the greedy (`g_q`) and uniform (`g_u`)
    /// bootstraps computed for the same transition.
    pub fn update(&mut self, g_q: f64, g_u: f64, d: f64) -> Result<BmcStep> {
        for (what, v) in [("greedy bootstrap", g_q), ("uniform bootstrap", g_u)] {
            if !v.is_finite() {
                return Err(Error::NonFinite { what, value: v });
            }
        }
        self.moments.update(d)?;
        let post = gamma_posterior(&self.prior, &self.moments);
        let log_e_q = model_log_evidence(g_q, &post, d);
        let log_e_u = model_log_evidence(g_u, &post, d);
        match self.weight.moment_match_log(log_e_u, log_e_q) {
            Some(w) => {
                self.weight = w;
                Ok(BmcStep::Updated)
            }
            None => Ok(BmcStep::Skipped),
        }
    }
}

/// Moving-average ε driven by TD-error magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdbeState {
    pub epsilon: f64,
}

impl VdbeState {
    /// `f = (1 − e^{−|δ|/σ}) / (1 + e^{−|δ|/σ})`, `ε' = delta·f + (1 − delta)·ε`.
    pub fn update(&self, td_error: f64, sigma: f64, delta: f64) -> VdbeState {
        let decay = (-td_error.abs() / sigma).exp();
        let f = (1.0 - decay) / (1.0 + decay);
        VdbeState { epsilon: (delta * f + (1.0 - delta) * self.epsilon).clamp(0.0, 1.0) }
    }
}

/// Declarative ε strategy, as read from an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant {
        c: f64,
    },
    /// `½ ρ^t`
    Geometric {
        rho: f64,
    },
    /// `½ (t+1)^(−exponent)`
    Power {
        exponent: f64,
    },
    Vdbe {
        sigma: f64,
        /// Defaults to `1/|A|` when omitted.
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default = "half")]
        eps0: f64,
    },
    Bmc {
        #[serde(default)]
        prior: NormalGammaPrior,
        alpha0: f64,
        beta0: f64,
        #[serde(default)]
        eps_min: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(field, msg))
            }
        };
        match *self {
            ScheduleSpec::Constant { c } => check((0.0..=1.0).contains(&c), "c", "must lie in [0, 1]"),
            ScheduleSpec::Geometric { rho } => check(rho > 0.0 && rho < 1.0, "rho", "must lie in (0, 1)"),
            ScheduleSpec::Power { exponent } => {
                check(exponent.is_finite() && exponent > 0.0, "exponent", "must be finite and > 0")
            }
            ScheduleSpec::Vdbe { sigma, delta, eps0 } => {
                check(sigma.is_finite() && sigma > 0.0, "sigma", "must be finite and > 0")?;
                if let Some(delta) = delta {
                    check(delta > 0.0 && delta <= 1.0, "delta", "must lie in (0, 1]")?;
                }
                check((0.0..=1.0).contains(&eps0), "eps0", "must lie in [0, 1]")
            }
            ScheduleSpec::Bmc { prior, alpha0, beta0, eps_min } => {
                prior.validate().map_err(|e| e.scoped("prior"))?;
                BetaWeight::new(alpha0, beta0)?;
                check((0.0..1.0).contains(&eps_min), "eps_min", "must lie in [0, 1)")
            }
        }
    }

    pub fn is_stateful(&self) -> bool {
        matches!(self, ScheduleSpec::Vdbe { .. } | ScheduleSpec::Bmc { .. })
    }
}

/// ε for a time-only schedule at the given episode number.
pub fn schedule_epsilon(spec: &ScheduleSpec, episode: u64) -> Result<f64> {
    match *spec {
        ScheduleSpec::Constant { c } => Ok(c),
        ScheduleSpec::Geometric { rho } => Ok(0.5 * rho.powf(episode as f64)),
        ScheduleSpec::Power { exponent } => Ok(0.5 * (episode as f64 + 1.0).powf(-exponent)),
        ScheduleSpec::Vdbe { .. } | ScheduleSpec::Bmc { .. } => Err(Error::invalid(
            "strategy.kind",
            "stateful strategies have no closed-form schedule",
        )),
    }
}

/// Signals produced by one environment step that a strategy may learn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSignal {
    pub g_q: f64,
    pub g_u: f64,
    pub g_exp: f64,
    pub td_error: f64,
}

/// Runtime ε strategy owned by one run.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonStrategy {
    Schedule { spec: ScheduleSpec, epsilon: f64 },
    Vdbe { state: VdbeState, sigma: f64, delta: f64 },
    Bmc(BmcState),
}

impl EpsilonStrategy {
    pub fn from_spec(spec: &ScheduleSpec, num_actions: usize) -> Result<Self> {
        spec.validate()?;
        Ok(match *spec {
            ScheduleSpec::Vdbe { sigma, delta, eps0 } => EpsilonStrategy::Vdbe {
                state: VdbeState { epsilon: eps0 },
                sigma,
                delta: delta.unwrap_or(1.0 / num_actions as f64),
            },
            ScheduleSpec::Bmc { prior, alpha0, beta0, eps_min } => {
                EpsilonStrategy::Bmc(BmcState::new(prior, alpha0, beta0, eps_min)?)
            }
            _ => EpsilonStrategy::Schedule { spec: spec.clone(), epsilon: schedule_epsilon(spec, 0)? },
        })
    }

    /// Called before each training episode; schedules are indexed by episode number.
    pub fn begin_episode(&mut self, episode: u64) {
        if let EpsilonStrategy::Schedule { spec, epsilon } = self {
            *epsilon = schedule_epsilon(spec, episode).expect("schedule variants are stateless");
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            EpsilonStrategy::Schedule { epsilon, .. } => *epsilon,
            EpsilonStrategy::Vdbe { state, .. } => state.epsilon,
            EpsilonStrategy::Bmc(state) => state.epsilon(),
        }
    }

    /// Per-step update. Schedules ignore the signal.
    pub fn observe(&mut self, signal: &StepSignal) -> Result<()> {
        match self {
            EpsilonStrategy::Schedule { .. } => {}
            EpsilonStrategy::Vdbe { state, sigma, delta } => {
                *state = state.update(signal.td_error, *sigma, *delta);
            }
            EpsilonStrategy::Bmc(state) => {
                state.update(signal.g_q, signal.g_u, signal.g_exp)?;
            }
        }
        Ok(())
    }
}
