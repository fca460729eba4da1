//! Scenario losses and the two learning-rate-parameterized surrogates.
//!
//! Every surrogate is built from one [`LossObservation`]: the decision `w_t`
//! submitted by the learner and the gradient `g_t` of the true loss there.
//!
//! * exp-concave surrogate: `-eta <g, w_t - w> + eta^2 <g, w_t - w>^2`
//! * strongly convex surrogate: `-eta <g, w_t - w> + eta^2 ||g||^2 ||w_t - w||^2`
//!
//! Both vanish at `w = w_t`.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Vector};
use crate::error::{check_dim, Result};

/// What the learner saw in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct LossObservation {
    pub round: usize,
    pub decision: Vector,
    pub gradient: Vector,
    pub grad_norm_sq: f64,
}

impl LossObservation {
    pub fn new(round: usize, decision: Vector, gradient: Vector) -> Result<Self> {
        check_dim(decision.len(), gradient.len())?;
        let grad_norm_sq = gradient.norm_squared();
        Ok(Self { round, decision, gradient, grad_norm_sq })
    }

    pub fn dimension(&self) -> usize {
        self.decision.len()
    }

    /// `<g_t, w_t - w>`
    fn linear_gap(&self, w: &Vector) -> f64 {
        self.gradient.dot(&(&self.decision - w))
    }
}

/// `l^eta(w) = -eta <g, w_t - w> + eta^2 <g, w_t - w>^2`
pub fn surrogate_exp(eta: f64, obs: &LossObservation, w: &Vector) -> Result<f64> {
    check_dim(obs.dimension(), w.len())?;
    let gap = obs.linear_gap(w);
    Ok(-eta * gap + eta * eta * gap * gap)
}

/// `eta g + 2 eta^2 <g, w - w_t> g`
pub fn surrogate_exp_grad(eta: f64, obs: &LossObservation, w: &Vector) -> Result<Vector> {
    check_dim(obs.dimension(), w.len())?;
    let gap = obs.linear_gap(w);
    Ok(&obs.gradient * (eta - 2.0 * eta * eta * gap))
}

/// `l_hat^eta(w) = -eta <g, w_t - w> + eta^2 ||g||^2 ||w_t - w||^2`
pub fn surrogate_sc(eta: f64, obs: &LossObservation, w: &Vector) -> Result<f64> {
    check_dim(obs.dimension(), w.len())?;
    let gap = obs.linear_gap(w);
    let dist_sq = (&obs.decision - w).norm_squared();
    Ok(-eta * gap + eta * eta * obs.grad_norm_sq * dist_sq)
}

/// `eta g + 2 eta^2 ||g||^2 (w - w_t)`
pub fn surrogate_sc_grad(eta: f64, obs: &LossObservation, w: &Vector) -> Result<Vector> {
    check_dim(obs.dimension(), w.len())?;
    Ok(&obs.gradient * eta + (w - &obs.decision) * (2.0 * eta * eta * obs.grad_norm_sq))
}

/// Logs a warning when `eta` exceeds `1/(5GD)`; the surrogate guarantees assume it does not.
pub fn warn_if_rate_too_large(eta: f64, domain: &Domain) {
    let cap = domain.max_learning_rate();
    if eta > cap * (1.0 + 1e-12) {
        log::warn!("learning rate {eta} exceeds 1/(5GD) = {cap}; surrogate bounds no longer apply");
    }
}

/// True per-round loss `f_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrueLoss {
    /// `<a, w>`
    Linear { a: Vec<f64> },
    /// `(modulus / 2) ||w - center||^2`
    Quadratic { center: Vec<f64>, modulus: f64 },
    /// `(<feature, w> - target)^2`
    SquaredError { feature: Vec<f64>, target: f64 },
}

impl TrueLoss {
    pub fn dimension(&self) -> usize {
        match self {
            TrueLoss::Linear { a } => a.len(),
            TrueLoss::Quadratic { center, .. } => center.len(),
            TrueLoss::SquaredError { feature, .. } => feature.len(),
        }
    }

    /// `(f(w), grad f(w))`
    pub fn eval(&self, w: &Vector) -> Result<(f64, Vector)> {
        check_dim(self.dimension(), w.len())?;
        Ok(match self {
            TrueLoss::Linear { a } => {
                let a = Vector::from_column_slice(a);
                (a.dot(w), a)
            }
            TrueLoss::Quadratic { center, modulus } => {
                let diff = w - Vector::from_column_slice(center);
                (0.5 * modulus * diff.norm_squared(), diff * *modulus)
            }
            TrueLoss::SquaredError { feature, target } => {
                let x = Vector::from_column_slice(feature);
                let resid = x.dot(w) - target;
                (resid * resid, x * (2.0 * resid))
            }
        })
    }

    pub fn value(&self, w: &Vector) -> Result<f64> {
        self.eval(w).map(|(v, _)| v)
    }

    /// `max_{w in domain} ||grad f(w)||`, computed in closed form.
    pub fn max_gradient_norm(&self, domain: &Domain) -> f64 {
        match self {
            TrueLoss::Linear { a } => Vector::from_column_slice(a).norm(),
            TrueLoss::Quadratic { center, modulus } => {
                modulus * domain.max_distance_from(&Vector::from_column_slice(center))
            }
            TrueLoss::SquaredError { feature, target } => {
                let x = Vector::from_column_slice(feature);
                2.0 * x.norm() * max_abs_residual(&x, *target, domain)
            }
        }
    }

    /// Largest `alpha` for which `exp(-alpha f)` is concave on the domain, when the
    /// family has one. Linear losses are only 0-exp-concave.
    pub fn exp_concavity(&self, domain: &Domain) -> Option<f64> {
        match self {
            TrueLoss::Linear { .. } => None,
            TrueLoss::Quadratic { modulus, .. } => {
                // lambda-strongly convex with gradients bounded by G is (lambda/G^2)-exp-concave
                let g = self.max_gradient_norm(domain);
                (g > 0.0).then(|| modulus / (g * g))
            }
            TrueLoss::SquaredError { feature, target } => {
                // h(z) = (z - y)^2 needs alpha h'(z)^2 <= h''(z), i.e. alpha <= 1 / (2 (z - y)^2)
                let m = max_abs_residual(&Vector::from_column_slice(feature), *target, domain);
                Some(if m > 0.0 { 1.0 / (2.0 * m * m) } else { f64::INFINITY })
            }
        }
    }
}

/// `max_{w in domain} |<x, w> - y|`
fn max_abs_residual(x: &Vector, y: f64, domain: &Domain) -> f64 {
    (domain.support(x) - y).max(domain.support(&-x) + y)
}
