//! Sleeping-expert tilted exponentially weighted averaging over interval experts.
//!
//! Each round:
//!
//! 1. [`Learner::begin_round`] creates one expert per (interval starting now,
//!    learning rate in that interval's grid), one ONS expert and, in
//!    [`Mode::Uma`], one AOGD expert;
//! 2. [`Learner::predict`] returns `sum_j exp(-L_j) eta_j w_j / sum_j exp(-L_j) eta_j`
//!    over all awake experts of both families;
//! 3. [`Learner::observe`] queries the true gradient once at the prediction,
//!    charges and steps every expert on its own surrogate, and retires
//!    experts whose interval ends this round.
//!
//! PAE is the same learner with the AOGD family switched off.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Vector};
use crate::error::{Error, Result};
use crate::experts::{AogdExpert, Expert, ExpertFamily, OnsExpert};
use crate::losses::{LossObservation, TrueLoss};
use crate::schedule::{intervals_starting_at, learning_rate_grid, IntervalKey};

/// Relative slack on the per-round gradient-bound check.
pub const GRADIENT_BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// ONS experts only.
    Pae,
    /// ONS and AOGD experts pooled under one normalizer.
    Uma,
}

/// One expert leaving the active set.
#[derive(Debug, Clone, PartialEq)]
pub struct Retirement {
    pub round: usize,
    pub interval: IntervalKey,
    pub eta: f64,
    pub family: ExpertFamily,
    pub cumulative_loss: f64,
}

/// Potential-function bookkeeping for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialRecord {
    pub round: usize,
    /// `sum exp(-L_{t-1})` over the experts awake at prediction time.
    pub before: f64,
    /// `sum exp(-L_t)` over the same experts after charging this round.
    pub after: f64,
    /// `after` plus `exp(-L)` of every expert retired so far (including this round).
    pub cumulative: f64,
    /// Experts created up to and including this round.
    pub created: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    pub potentials: Vec<PotentialRecord>,
    pub retirements: Vec<Retirement>,
    retired_potential: f64,
}

/// Per-round output of the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub decision: Vector,
    pub loss: f64,
    pub gradient: Vector,
    pub n_active_ons: usize,
    pub n_active_aogd: usize,
    pub potential: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Learner {
    mode: Mode,
    domain: Domain,
    round: usize,
    experts: Vec<Expert>,
    born_this_round: bool,
    prediction: Option<Vector>,
    created: usize,
    audit: Option<Audit>,
}

impl Learner {
    pub fn new(mode: Mode, domain: Domain) -> Self {
        Self {
            mode,
            domain,
            round: 1,
            experts: Vec::new(),
            born_this_round: false,
            prediction: None,
            created: 0,
            audit: None,
        }
    }

    pub fn uma(domain: Domain) -> Self {
        Self::new(Mode::Uma, domain)
    }

    pub fn pae(domain: Domain) -> Self {
        Self::new(Mode::Pae, domain)
    }

    /// Keep potential-function and retirement records.
    pub fn with_audit(mut self) -> Self {
        self.audit = Some(Audit::default());
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// The round about to be played (1-based).
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn audit(&self) -> Option<&Audit> {
        self.audit.as_ref()
    }

    pub fn experts_created(&self) -> usize {
        self.created
    }

    pub fn active_count(&self, family: ExpertFamily) -> usize {
        self.experts.iter().filter(|e| e.family() == family).count()
    }

    /// Creates the experts whose intervals open at the current round. Idempotent within a round.
    pub fn begin_round(&mut self) -> Result<()> {
        if self.born_this_round {
            return Ok(());
        }
        let t = self.round as u64;
        for interval in intervals_starting_at(t) {
            let grid = learning_rate_grid(interval.len(), self.domain.diameter(), self.domain.gradient_bound())?;
            for eta in grid {
                self.experts.push(Expert::Ons(OnsExpert::new(interval, eta, &self.domain)));
                self.created += 1;
                if self.mode == Mode::Uma {
                    self.experts.push(Expert::Aogd(AogdExpert::new(interval, eta, &self.domain)));
                    self.created += 1;
                }
            }
        }
        self.born_this_round = true;
        Ok(())
    }

    /// Log-space weights `ln(eta) - L`, shifted so the largest is 0.
    pub fn log_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.experts.iter().map(|e| e.eta().ln() - e.cumulative_loss()).collect();
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        raw.into_iter().map(|x| x - max).collect()
    }

    /// The aggregated decision for the current round.
    pub fn predict(&mut self) -> Result<Vector> {
        self.begin_round()?;
        if self.experts.is_empty() {
            return Err(Error::ContractViolation("no active experts".into()));
        }
        let weights: Vec<f64> = self.log_weights().into_iter().map(f64::exp).collect();
        let total: f64 = weights.iter().sum();
        let mut w = Vector::zeros(self.domain.dimension());
        for (weight, expert) in weights.iter().zip(&self.experts) {
            w.axpy(*weight / total, expert.decision(), 1.0);
        }
        self.prediction = Some(w.clone());
        Ok(w)
    }

    /// Evaluates `loss` at this round's prediction and updates every awake expert.
    pub fn observe(&mut self, loss: &TrueLoss) -> Result<(RoundRecord, LossObservation)> {
        let decision = self
            .prediction
            .take()
            .ok_or_else(|| Error::ContractViolation(format!("observe called before predict in round {}", self.round)))?;
        let (value, gradient) = loss.eval(&decision)?;
        let bound = self.domain.gradient_bound();
        let norm = gradient.norm();
        if norm > bound * (1.0 + GRADIENT_BOUND_SLACK) {
            return Err(Error::GradientBound { round: self.round, norm, bound });
        }
        let obs = LossObservation::new(self.round, decision.clone(), gradient.clone())?;

        let n_active_ons = self.active_count(ExpertFamily::Ons);
        let n_active_aogd = self.active_count(ExpertFamily::Aogd);
        let before: f64 = self.experts.iter().map(|e| (-e.cumulative_loss()).exp()).sum();

        for expert in &mut self.experts {
            expert.step(&obs, &self.domain)?;
        }

        let after: f64 = self.experts.iter().map(|e| (-e.cumulative_loss()).exp()).sum();
        let t = self.round;
        if let Some(audit) = self.audit.as_mut() {
            for e in self.experts.iter().filter(|e| e.interval().end() == t as u64) {
                audit.retired_potential += (-e.cumulative_loss()).exp();
                audit.retirements.push(Retirement {
                    round: t,
                    interval: e.interval(),
                    eta: e.eta(),
                    family: e.family(),
                    cumulative_loss: e.cumulative_loss(),
                });
            }
        }
        self.experts.retain(|e| e.interval().end() != t as u64);
        let potential = self.audit.as_mut().map(|audit| {
            let active: f64 = self.experts.iter().map(|e| (-e.cumulative_loss()).exp()).sum();
            audit.potentials.push(PotentialRecord {
                round: t,
                before,
                after,
                cumulative: active + audit.retired_potential,
                created: self.created,
            });
            after
        });

        self.round += 1;
        self.born_this_round = false;
        let record = RoundRecord { round: t, decision, loss: value, gradient, n_active_ons, n_active_aogd, potential };
        Ok((record, obs))
    }

    /// `begin_round`, `predict` and `observe` in one call.
    pub fn step(&mut self, loss: &TrueLoss) -> Result<RoundRecord> {
        self.predict()?;
        self.observe(loss).map(|(record, _)| record)
    }

    /// Plays the whole loss sequence.
    pub fn run(&mut self, losses: &[TrueLoss]) -> Result<Vec<RoundRecord>> {
        losses.iter().map(|f| self.step(f)).collect()
    }
}
