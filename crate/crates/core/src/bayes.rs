//! Conjugate machinery for the return-precision model.
//!
//! Observed returns are summarised by [`RunningMoments`] (Welford's single-pass
//! recurrence). Combined with a [`NormalGammaPrior`] they give the marginal
//! gamma posterior over the precision `τ`, and integrating `τ` out yields a
//! three-parameter Student-t predictive density for each candidate return model.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Online count / mean / sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningMoments {
    pub count: u64,
    pub mean: f64,
    pub sum_sq_dev: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one observation. Non-finite values are rejected and leave `self` untouched.
    pub fn update(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "return observation", value: x });
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        let delta2 = x - self.mean;
        self.sum_sq_dev = (self.sum_sq_dev + delta * delta2).max(0.0);
        Ok(())
    }

    /// Value-returning form of [`RunningMoments::update`].
    pub fn updated(mut self, x: f64) -> Result<Self> {
        self.update(x)?;
        Ok(self)
    }

    /// Population variance `sum_sq_dev / count`; zero while `count <= 1`.
    pub fn variance(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            self.sum_sq_dev / self.count as f64
        }
    }
}

/// Prior `NormalGamma(μ₀, τ₀, a₀, b₀)` over the mean and precision of returns.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalGammaPrior {
    pub mu0: f64,
    pub tau0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl Default for NormalGammaPrior {
    /// The setting used for every benchmark domain: `(0, 1, 500, 500)`.
    fn default() -> Self {
        Self { mu0: 0.0, tau0: 1.0, a0: 500.0, b0: 500.0 }
    }
}

impl NormalGammaPrior {
    pub fn new(mu0: f64, tau0: f64, a0: f64, b0: f64) -> Result<Self> {
        let prior = Self { mu0, tau0, a0, b0 };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu0.is_finite() {
            return Err(Error::invalid("mu0", "must be finite"));
        }
        for (name, v) in [("tau0", self.tau0), ("a0", self.a0), ("b0", self.b0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `Gamma(a, b)` posterior over the precision `τ` (shape / rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPosterior {
    pub a: f64,
    pub b: f64,
}

impl GammaPosterior {
    /// Posterior mean of `τ`, which is also the Student-t precision.
    pub fn precision(&self) -> f64 {
        self.a / self.b
    }
}

/// Marginal posterior of `τ` given the summarised returns.
///
/// `a = a₀ + t/2`, `b = b₀ + t/2 · (σ̂² + τ₀/(τ₀+t) · (μ̂ − μ₀)²)`.
pub fn gamma_posterior(prior: &NormalGammaPrior, m: &RunningMoments) -> GammaPosterior {
    let t = m.count as f64;
    let a = prior.a0 + 0.5 * t;
    if m.count == 0 {
        return GammaPosterior { a, b: prior.b0 };
    }
    let shift = m.mean - prior.mu0;
    let b = prior.b0 + 0.5 * t * (m.variance() + prior.tau0 / (prior.tau0 + t) * shift * shift);
    GammaPosterior { a, b }
}

/// Three-parameter Student-t `St(location, precision, dof)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentTParams {
    pub location: f64,
    pub precision: f64,
    pub dof: f64,
}

impl StudentTParams {
    pub fn new(location: f64, precision: f64, dof: f64) -> Result<Self> {
        if !(precision.is_finite() && precision > 0.0) {
            return Err(Error::invalid("precision", format!("must be finite and > 0, got {precision}")));
        }
        if !(dof.is_finite() && dof > 0.0) {
            return Err(Error::invalid("dof", format!("must be finite and > 0, got {dof}")));
        }
        Ok(Self { location, precision, dof })
    }

    /// Predictive for a model whose mean return is `location`, with `τ` integrated out.
    pub fn predictive(location: f64, post: &GammaPosterior) -> Self {
        Self { location, precision: post.precision(), dof: 2.0 * post.a }
    }
}

/// Log density of `St(μ, λ, ν)` at `x`:
///
/// `lnΓ((ν+1)/2) − lnΓ(ν/2) + ½ ln(λ/(πν)) − (ν+1)/2 · ln(1 + λ(x−μ)²/ν)`.
pub fn student_t_log_density(p: &StudentTParams, x: f64) -> f64 {
    let nu = p.dof;
    let z = x - p.location;
    let half_nu = 0.5 * nu;
    ln_gamma(half_nu + 0.5) - ln_gamma(half_nu) + 0.5 * (p.precision / (PI * nu)).ln()
        - (half_nu + 0.5) * (p.precision * z * z / nu).ln_1p()
}

/// Log of [`model_evidence`].
pub fn model_log_evidence(g_model: f64, post: &GammaPosterior, d: f64) -> f64 {
    student_t_log_density(&StudentTParams::predictive(g_model, post), d)
}

/// Predictive density of observing return `d` under the model with mean `g_model`.
pub fn model_evidence(g_model: f64, post: &GammaPosterior, d: f64) -> f64 {
    model_log_evidence(g_model, post, d).exp()
}
