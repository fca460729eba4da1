//! Per-interval expert algorithms.
//!
//! [`OnsExpert`] runs online Newton step on the exp-concave surrogate and
//! [`AogdExpert`] runs adaptive online gradient descent on the strongly convex
//! surrogate. Each lives for exactly one covering interval and starts from the
//! domain center.

use crate::domain::{Domain, Matrix, Vector, GENERALIZED_PROJECTION_TOL};
use crate::error::{Error, Result};
use crate::losses::{
    surrogate_exp, surrogate_exp_grad, surrogate_sc, surrogate_sc_grad, warn_if_rate_too_large,
    LossObservation,
};
use crate::schedule::IntervalKey;

/// `beta = min(1 / (4 D * 7/(25 D)), 1) / 2`, independent of `D`.
pub const ONS_BETA: f64 = 25.0 / 56.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OnsExpert {
    pub interval: IntervalKey,
    pub eta: f64,
    pub w: Vector,
    pub sigma: Matrix,
    pub cumulative_loss: f64,
    projection_tol: f64,
}

impl OnsExpert {
    pub fn new(interval: IntervalKey, eta: f64, domain: &Domain) -> Self {
        warn_if_rate_too_large(eta, domain);
        let d = domain.dimension();
        let scale = 1.0 / (ONS_BETA * ONS_BETA * domain.diameter() * domain.diameter());
        Self {
            interval,
            eta,
            w: domain.center(),
            sigma: Matrix::identity(d, d) * scale,
            cumulative_loss: 0.0,
            projection_tol: GENERALIZED_PROJECTION_TOL,
        }
    }

    pub fn with_projection_tol(mut self, tol: f64) -> Self {
        self.projection_tol = tol;
        self
    }

    /// Charges the surrogate at the current iterate, then takes one Newton step.
    pub fn step(&mut self, obs: &LossObservation, domain: &Domain) -> Result<()> {
        check_round(self.interval, obs.round)?;
        let loss = surrogate_exp(self.eta, obs, &self.w)?;
        let grad = surrogate_exp_grad(self.eta, obs, &self.w)?;
        self.cumulative_loss += loss;
        if grad.iter().all(|g| *g == 0.0) {
            return Ok(());
        }
        self.sigma.ger(1.0, &grad, &grad, 1.0);
        let direction = solve_spd(&self.sigma, &grad)?;
        let target = &self.w - direction / ONS_BETA;
        self.w = domain.project_generalized(&self.sigma, &target, self.projection_tol)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AogdExpert {
    pub interval: IntervalKey,
    pub eta: f64,
    pub w: Vector,
    /// Sum of `||g_i||^2` over the rounds seen so far.
    pub grad_norm_accum: f64,
    pub cumulative_loss: f64,
}

impl AogdExpert {
    pub fn new(interval: IntervalKey, eta: f64, domain: &Domain) -> Self {
        warn_if_rate_too_large(eta, domain);
        Self { interval, eta, w: domain.center(), grad_norm_accum: 0.0, cumulative_loss: 0.0 }
    }

    /// `alpha_t = 2 eta^2 G^2 + 2 eta^2 sum ||g_i||^2`, given the current accumulator.
    pub fn step_size_denominator(&self, gradient_bound: f64) -> f64 {
        2.0 * self.eta * self.eta * (gradient_bound * gradient_bound + self.grad_norm_accum)
    }

    pub fn step(&mut self, obs: &LossObservation, domain: &Domain) -> Result<()> {
        check_round(self.interval, obs.round)?;
        let loss = surrogate_sc(self.eta, obs, &self.w)?;
        let grad = surrogate_sc_grad(self.eta, obs, &self.w)?;
        self.cumulative_loss += loss;
        self.grad_norm_accum += obs.grad_norm_sq;
        let alpha = self.step_size_denominator(domain.gradient_bound());
        self.w = domain.project(&(&self.w - grad / alpha))?;
        Ok(())
    }
}

/// Which surrogate an expert minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExpertFamily {
    Ons,
    Aogd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expert {
    Ons(OnsExpert),
    Aogd(AogdExpert),
}

impl Expert {
    pub fn family(&self) -> ExpertFamily {
        match self {
            Expert::Ons(_) => ExpertFamily::Ons,
            Expert::Aogd(_) => ExpertFamily::Aogd,
        }
    }

    pub fn interval(&self) -> IntervalKey {
        match self {
            Expert::Ons(e) => e.interval,
            Expert::Aogd(e) => e.interval,
        }
    }

    pub fn eta(&self) -> f64 {
        match self {
            Expert::Ons(e) => e.eta,
            Expert::Aogd(e) => e.eta,
        }
    }

    pub fn decision(&self) -> &Vector {
        match self {
            Expert::Ons(e) => &e.w,
            Expert::Aogd(e) => &e.w,
        }
    }

    pub fn cumulative_loss(&self) -> f64 {
        match self {
            Expert::Ons(e) => e.cumulative_loss,
            Expert::Aogd(e) => e.cumulative_loss,
        }
    }

    /// Surrogate value this expert is charged for `obs` at its current iterate.
    pub fn surrogate_at_iterate(&self, obs: &LossObservation) -> Result<f64> {
        match self {
            Expert::Ons(e) => surrogate_exp(e.eta, obs, &e.w),
            Expert::Aogd(e) => surrogate_sc(e.eta, obs, &e.w),
        }
    }

    pub fn step(&mut self, obs: &LossObservation, domain: &Domain) -> Result<()> {
        match self {
            Expert::Ons(e) => e.step(obs, domain),
            Expert::Aogd(e) => e.step(obs, domain),
        }
    }
}

fn check_round(interval: IntervalKey, round: usize) -> Result<()> {
    if !interval.contains(round as u64) {
        return Err(Error::ContractViolation(format!(
            "round {round} is outside the expert interval {interval}"
        )));
    }
    Ok(())
}

/// `sigma^{-1} g` through a Cholesky factorization.
pub(crate) fn solve_spd(sigma: &Matrix, g: &Vector) -> Result<Vector> {
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("ONS precondition matrix lost positive definiteness".into()))?;
    Ok(chol.solve(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Domain {
        Domain::centered_ball(1, 1.0, 1.0).unwrap()
    }

    fn obs1(round: usize, wt: f64, g: f64) -> LossObservation {
        LossObservation::new(round, Vector::from_element(1, wt), Vector::from_element(1, g)).unwrap()
    }

    fn key(level: u32, index: u64) -> IntervalKey {
        IntervalKey::new(level, index).unwrap()
    }

    #[test]
    fn ons_init_state() {
        let e = OnsExpert::new(key(0, 1), 0.1, &line());
        assert_eq!(e.cumulative_loss, 0.0);
        assert_eq!(e.w, Vector::zeros(1));
        let expected = 1.0 / ((25.0f64 / 56.0).powi(2) * 4.0);
        assert!((e.sigma[(0, 0)] - expected).abs() < 1e-15);
        assert!((expected - 1.2544).abs() < 1e-12);
    }

    #[test]
    fn ons_zero_gradient_is_noop() {
        let mut e = OnsExpert::new(key(2, 1), 0.1, &line());
        let before = e.clone();
        e.step(&obs1(4, 0.3, 0.0), &line()).unwrap();
        assert_eq!(e.w, before.w);
        assert_eq!(e.sigma, before.sigma);
        assert_eq!(e.cumulative_loss, 0.0);
    }

    #[test]
    fn ons_scalar_step() {
        // sigma_0 = 1.2544, grad = 0.1, sigma_1 = 1.2644, w_1 = -(56/25) (0.1 / 1.2644)
        let mut e = OnsExpert::new(key(0, 3), 0.1, &line());
        e.step(&obs1(3, 0.0, 1.0), &line()).unwrap();
        let sigma1 = 1.2544 + 0.01;
        assert!((e.sigma[(0, 0)] - sigma1).abs() < 1e-12);
        let expected = 0.0 - (56.0 / 25.0) * (0.1 / sigma1);
        assert!((e.w[0] - expected).abs() < 1e-12);
        assert!((e.w[0] + 0.1772).abs() < 1e-4);
    }

    #[test]
    fn step_outside_interval_is_rejected() {
        let mut e = OnsExpert::new(key(1, 2), 0.1, &line());
        assert!(matches!(e.step(&obs1(6, 0.0, 1.0), &line()), Err(Error::ContractViolation(_))));
        let mut a = AogdExpert::new(key(1, 2), 0.1, &line());
        assert!(matches!(a.step(&obs1(3, 0.0, 1.0), &line()), Err(Error::ContractViolation(_))));
        assert!(a.step(&obs1(4, 0.0, 1.0), &line()).is_ok());
    }

    #[test]
    fn aogd_init_state() {
        let a = AogdExpert::new(key(0, 1), 0.1, &line());
        assert_eq!(a.grad_norm_accum, 0.0);
        assert_eq!(a.cumulative_loss, 0.0);
        assert!(line().contains(&a.w, 0.0));
    }

    #[test]
    fn aogd_zero_gradient() {
        let mut a = AogdExpert::new(key(0, 1), 0.1, &line());
        a.w = Vector::from_element(1, 0.4);
        a.step(&obs1(1, 0.0, 0.0), &line()).unwrap();
        assert_eq!(a.w[0], 0.4);
        assert!((a.step_size_denominator(1.0) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn aogd_scalar_step() {
        // grad = 0.1 + 2 * 0.01 * 1 * 0.5 = 0.11, alpha = 0.04, 0.5 - 2.75 -> clamp to -1
        let mut a = AogdExpert::new(key(0, 1), 0.1, &line());
        a.w = Vector::from_element(1, 0.5);
        a.step(&obs1(1, 0.0, 1.0), &line()).unwrap();
        assert!((a.step_size_denominator(1.0) - 0.04).abs() < 1e-15);
        assert_eq!(a.w[0], -1.0);
    }

    #[test]
    fn sigma_update_is_rank_one() {
        let domain = Domain::centered_ball(3, 1.0, 1.0).unwrap();
        let mut e = OnsExpert::new(key(3, 1), 0.05, &domain);
        let o = LossObservation::new(
            9,
            Vector::from_vec(vec![0.1, 0.2, -0.3]),
            Vector::from_vec(vec![0.5, -0.3, 0.6]),
        )
        .unwrap();
        let grad = surrogate_exp_grad(e.eta, &o, &e.w).unwrap();
        let before = e.sigma.clone();
        e.step(&o, &domain).unwrap();
        let diff = &e.sigma - &before - &grad * grad.transpose();
        assert!(diff.amax() < 1e-12);
        let dir = solve_spd(&e.sigma, &grad).unwrap();
        assert!((&e.sigma * dir - &grad).norm() < 1e-10);
    }
}
