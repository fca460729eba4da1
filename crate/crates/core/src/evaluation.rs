//! Regret measurement and the closed-form interval bounds.
//!
//! All three loss families are quadratic in `w`, so the summed loss over any
//! interval is `1/2 w^T H w + h^T w + c`. [`QuadraticModel`] keeps those
//! coefficients; prefix sums make the model of any interval an O(d^2)
//! subtraction, which keeps the O(T^2) weakly adaptive scan tractable.

use std::fmt::Write as _;

use nalgebra::SymmetricEigen;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainKind, Matrix, Vector};
use crate::error::{Error, Result};
use crate::losses::TrueLoss;
use crate::meta::{Mode, RoundRecord};
use crate::schedule::{ceil_log2, intervals_starting_at};

/// Default per-round comparator tolerance.
pub const COMPARATOR_TOL: f64 = 1e-8;
/// Largest horizon accepted by the weakly adaptive scan.
pub const WEAKLY_ADAPTIVE_MAX_T: usize = 512;

const COMPARATOR_MAX_ITERS: usize = 200_000;

/// Curvature regime of a stretch of rounds, read from scenario metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    GeneralConvex,
    ExpConcave { alpha: f64 },
    StronglyConvex { lambda: f64 },
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::GeneralConvex => "general_convex",
            Regime::ExpConcave { .. } => "exp_concave",
            Regime::StronglyConvex { .. } => "strongly_convex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValues {
    pub a: f64,
    pub b: f64,
    pub a_hat: f64,
    pub theorem1_bound: Option<f64>,
    pub theorem2_bound: Option<f64>,
    pub general_convex_bound: Option<f64>,
}

/// `a(p,q) = 2 log2(2q) + 5 d ln(q-p+2) + 5`
pub fn a_fn(p: u64, q: u64, d: usize) -> f64 {
    2.0 * (2.0 * q as f64).log2() + 5.0 * d as f64 * ((q - p + 2) as f64).ln() + 5.0
}

/// `b(p,q) = 2 ceil(log2(q-p+2))`
pub fn b_fn(p: u64, q: u64) -> f64 {
    2.0 * ceil_log2(q - p + 2) as f64
}

/// `a_hat(p,q) = 1 + 2 log2(2q) + ln(q-p+2)`
pub fn a_hat_fn(p: u64, q: u64) -> f64 {
    1.0 + 2.0 * (2.0 * q as f64).log2() + ((q - p + 2) as f64).ln()
}

/// Interval bounds for `[p, q]`. The general-convex bound is always filled in;
/// the exp-concave and strongly convex ones need their regime parameter.
pub fn bound_values(
    p: u64,
    q: u64,
    d: usize,
    diameter: f64,
    gradient_bound: f64,
    regime: Option<Regime>,
) -> Result<BoundValues> {
    if p == 0 || p > q {
        return Err(Error::InvalidArgument(format!("need 1 <= p <= q, got p = {p}, q = {q}")));
    }
    let (a, b, a_hat) = (a_fn(p, q, d), b_fn(p, q), a_hat_fn(p, q));
    let dg = diameter * gradient_bound;
    let len = (q - p + 1) as f64;
    let mut out = BoundValues {
        a,
        b,
        a_hat,
        theorem1_bound: None,
        theorem2_bound: None,
        general_convex_bound: Some(10.0 * dg * a_hat * b + 21.0 * dg * (a_hat * len).sqrt()),
    };
    match regime {
        Some(Regime::ExpConcave { alpha }) => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
            }
            let beta = 0.5 * (1.0 / (4.0 * dg)).min(alpha);
            out.theorem1_bound = Some((10.0 * dg + 9.0 / (2.0 * beta)) * a * b);
        }
        Some(Regime::StronglyConvex { lambda }) => {
            if !(lambda > 0.0) {
                return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
            }
            let g2 = gradient_bound * gradient_bound;
            out.theorem2_bound = Some((10.0 * dg + 9.0 * g2 / (2.0 * lambda)) * a_hat * b);
        }
        Some(Regime::GeneralConvex) | None => {}
    }
    Ok(out)
}

/// The bound that applies to a learner on an interval of the given regime, if any.
/// `mode == None` means a baseline with no interval guarantee.
pub fn applicable_bound(values: &BoundValues, regime: Regime, mode: Option<Mode>) -> Option<f64> {
    match (mode?, regime) {
        (_, Regime::ExpConcave { .. }) => values.theorem1_bound,
        (Mode::Uma, Regime::StronglyConvex { .. }) => values.theorem2_bound,
        (Mode::Uma, Regime::GeneralConvex) => values.general_convex_bound,
        (Mode::Pae, _) => None,
    }
}

/// `1/2 w^T H w + h^T w + c`
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub hessian: Matrix,
    pub linear: Vector,
    pub constant: f64,
}

impl QuadraticModel {
    pub fn zero(d: usize) -> Self {
        Self { hessian: Matrix::zeros(d, d), linear: Vector::zeros(d), constant: 0.0 }
    }

    pub fn add_loss(&mut self, loss: &TrueLoss) {
        match loss {
            TrueLoss::Linear { a } => {
                self.linear += Vector::from_column_slice(a);
            }
            TrueLoss::Quadratic { center, modulus } => {
                let c = Vector::from_column_slice(center);
                for i in 0..c.len() {
                    self.hessian[(i, i)] += modulus;
                }
                self.linear.axpy(-modulus, &c, 1.0);
                self.constant += 0.5 * modulus * c.norm_squared();
            }
            TrueLoss::SquaredError { feature, target } => {
                let x = Vector::from_column_slice(feature);
                self.hessian.ger(2.0, &x, &x, 1.0);
                self.linear.axpy(-2.0 * target, &x, 1.0);
                self.constant += target * target;
            }
        }
    }

    pub fn from_losses(d: usize, losses: &[TrueLoss]) -> Self {
        let mut m = Self::zero(d);
        for f in losses {
            m.add_loss(f);
        }
        m
    }

    pub fn value(&self, w: &Vector) -> f64 {
        0.5 * w.dot(&(&self.hessian * w)) + self.linear.dot(w) + self.constant
    }

    pub fn gradient(&self, w: &Vector) -> Vector {
        &self.hessian * w + &self.linear
    }

    fn difference(&self, earlier: &Self) -> Self {
        Self {
            hessian: &self.hessian - &earlier.hessian,
            linear: &self.linear - &earlier.linear,
            constant: self.constant - earlier.constant,
        }
    }

    /// Minimizer over the domain. Exact on balls (eigendecomposition plus a
    /// bisection on the multiplier); projected gradient with backtracking on boxes.
    pub fn minimize(&self, domain: &Domain, tol: f64) -> Result<(Vector, f64)> {
        let w = match domain.kind() {
            DomainKind::L2Ball { center, radius } => {
                minimize_on_ball(self, &Vector::from_column_slice(center), *radius)
            }
            DomainKind::Box { .. } => minimize_projected(
                |w| (self.value(w), self.gradient(w)),
                domain,
                domain.center(),
                tol,
            )?,
        };
        Ok((w.clone(), self.value(&w)))
    }
}

fn minimize_on_ball(model: &QuadraticModel, center: &Vector, radius: f64) -> Vector {
    // shift to z = w - center: 1/2 z^T H z + g^T z
    let g = model.gradient(center);
    let eig = SymmetricEigen::new(model.hessian.clone());
    let b = eig.eigenvectors.transpose() * &g;
    let lam_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let flat = 1e-12 * lam_max.max(1.0);
    let z_of = |mu: f64| -> Vector {
        Vector::from_iterator(
            b.len(),
            b.iter().zip(eig.eigenvalues.iter()).map(|(bi, li)| {
                let denom = li.max(0.0) + mu;
                if denom <= flat {
                    0.0
                } else {
                    -bi / denom
                }
            }),
        )
    };
    let unbounded = b
        .iter()
        .zip(eig.eigenvalues.iter())
        .any(|(bi, li)| *li <= flat && bi.abs() > 1e-14 * g.norm().max(1.0));
    let z_free = z_of(0.0);
    let coords = if !unbounded && z_free.norm() <= radius {
        z_free
    } else {
        let mut lo = 0.0;
        let mut hi = g.norm() / radius + flat;
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if z_of(mid).norm() > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        z_of(hi)
    };
    let mut z = &eig.eigenvectors * coords;
    let n = z.norm();
    if n > radius {
        z *= radius / n;
    }
    center + z
}

/// Accelerated projected gradient with backtracking on the local Lipschitz constant
/// and gradient-based restart.
/// Stops once `D * ||gradient mapping||` (a bound on the suboptimality) is at most `tol`.
pub fn minimize_projected<F>(f: F, domain: &Domain, start: Vector, tol: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> (f64, Vector),
{
    let mut x = domain.project(&start)?;
    let mut y = x.clone();
    let mut momentum = 1.0f64;
    let mut step = 1.0f64;
    let (mut best_val, _) = f(&x);
    let mut best = x.clone();
    for _ in 0..COMPARATOR_MAX_ITERS {
        let (_, gy) = f(&y);
        let mut next;
        loop {
            // local smoothness test on gradients; value differences drown in rounding near the optimum
            next = domain.project_unchecked(&(&y - &gy * step));
            let diff = &next - &y;
            let (_, gn) = f(&next);
            if (&gn - &gy).norm() * step <= diff.norm() * (1.0 + 1e-12) {
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::ComparatorConvergence { iterations: 0, best_value: best_val });
            }
        }
        let mapping = (&y - &next).norm() / step;
        let (fnext, _) = f(&next);
        if fnext < best_val {
            best_val = fnext;
            best = next.clone();
        }
        if mapping * domain.diameter() <= tol {
            return Ok(best);
        }
        // gradient-based restart; insensitive to rounding in the objective
        if (&y - &next).dot(&(&next - &x)) > 0.0 {
            momentum = 1.0;
            y = next.clone();
        } else {
            let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            y = &next + (&next - &x) * ((momentum - 1.0) / m_next);
            momentum = m_next;
        }
        x = next;
        step *= 1.5;
    }
    Err(Error::ComparatorConvergence { iterations: COMPARATOR_MAX_ITERS, best_value: best_val })
}

/// Best fixed decision in hindsight for a batch of losses; returns `(w*, sum f(w*))`.
/// The cumulative loss is within `tol * losses.len()` of the true minimum.
pub fn offline_comparator(losses: &[TrueLoss], domain: &Domain, tol: f64) -> Result<(Vector, f64)> {
    let model = QuadraticModel::from_losses(domain.dimension(), losses);
    model.minimize(domain, tol * losses.len().max(1) as f64)
}

/// Regret of one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRegret {
    pub p: usize,
    pub q: usize,
    pub learner_cum_loss: f64,
    pub comparator_cum_loss: f64,
    pub comparator: Vector,
    pub regret: f64,
}

/// Regret queries against a fixed trajectory and loss sequence.
pub struct RegretEvaluator<'a> {
    domain: &'a Domain,
    losses: &'a [TrueLoss],
    learner_prefix: Vec<f64>,
    model_prefix: Vec<QuadraticModel>,
    tol: f64,
}

impl<'a> RegretEvaluator<'a> {
    pub fn new(trajectory: &[RoundRecord], losses: &'a [TrueLoss], domain: &'a Domain, tol: f64) -> Result<Self> {
        if trajectory.len() != losses.len() {
            return Err(Error::InvalidArgument(format!(
                "trajectory has {} rounds but the scenario has {}",
                trajectory.len(),
                losses.len()
            )));
        }
        let d = domain.dimension();
        let mut learner_prefix = Vec::with_capacity(losses.len() + 1);
        learner_prefix.push(0.0);
        let mut model_prefix = Vec::with_capacity(losses.len() + 1);
        model_prefix.push(QuadraticModel::zero(d));
        let mut acc = 0.0;
        let mut model = QuadraticModel::zero(d);
        for (rec, f) in trajectory.iter().zip(losses) {
            acc += rec.loss;
            learner_prefix.push(acc);
            model.add_loss(f);
            model_prefix.push(model.clone());
        }
        Ok(Self { domain, losses, learner_prefix, model_prefix, tol })
    }

    pub fn horizon(&self) -> usize {
        self.losses.len()
    }

    /// Regret on the 1-based inclusive interval `[p, q]`.
    pub fn interval(&self, p: usize, q: usize) -> Result<IntervalRegret> {
        if p == 0 || p > q || q > self.horizon() {
            return Err(Error::InvalidArgument(format!(
                "interval [{p},{q}] is not inside [1,{}]",
                self.horizon()
            )));
        }
        let model = self.model_prefix[q].difference(&self.model_prefix[p - 1]);
        let (comparator, comparator_cum_loss) = model.minimize(self.domain, self.tol * (q - p + 1) as f64)?;
        let learner_cum_loss = self.learner_prefix[q] - self.learner_prefix[p - 1];
        Ok(IntervalRegret {
            p,
            q,
            learner_cum_loss,
            comparator_cum_loss,
            comparator,
            regret: learner_cum_loss - comparator_cum_loss,
        })
    }

    /// Largest regret over windows of length `tau`, with the window achieving it.
    pub fn strongly_adaptive(&self, tau: usize) -> Result<IntervalRegret> {
        let t = self.horizon();
        if tau == 0 || tau > t {
            return Err(Error::InvalidArgument(format!("window length {tau} not in [1,{t}]")));
        }
        let windows: Vec<IntervalRegret> = (1..=t - tau + 1)
            .into_par_iter()
            .map(|p| self.interval(p, p + tau - 1))
            .collect::<Result<_>>()?;
        Ok(max_regret(windows))
    }

    /// Maximum regret over every interval, computed as the maximum over window lengths.
    pub fn weakly_adaptive(&self) -> Result<IntervalRegret> {
        let t = self.horizon();
        check_weak_horizon(t)?;
        let per_tau: Vec<IntervalRegret> = (1..=t).map(|tau| self.strongly_adaptive(tau)).collect::<Result<_>>()?;
        Ok(max_regret(per_tau))
    }
}

fn max_regret(items: Vec<IntervalRegret>) -> IntervalRegret {
    items
        .into_iter()
        .reduce(|best, r| if r.regret > best.regret { r } else { best })
        .expect("at least one interval")
}

fn check_weak_horizon(t: usize) -> Result<()> {
    if t == 0 || t > WEAKLY_ADAPTIVE_MAX_T {
        return Err(Error::InvalidArgument(format!(
            "weakly adaptive regret needs 1 <= T <= {WEAKLY_ADAPTIVE_MAX_T}, got {t}"
        )));
    }
    Ok(())
}

pub fn strongly_adaptive_regret(
    trajectory: &[RoundRecord],
    losses: &[TrueLoss],
    domain: &Domain,
    tau: usize,
    tol: f64,
) -> Result<f64> {
    RegretEvaluator::new(trajectory, losses, domain, tol)?
        .strongly_adaptive(tau)
        .map(|r| r.regret)
}

pub fn weakly_adaptive_regret(trajectory: &[RoundRecord], losses: &[TrueLoss], domain: &Domain, tol: f64) -> Result<f64> {
    RegretEvaluator::new(trajectory, losses, domain, tol)?
        .weakly_adaptive()
        .map(|r| r.regret)
}

/// Direct double loop over all intervals, summing losses from scratch each time.
pub fn weakly_adaptive_regret_brute(
    trajectory: &[RoundRecord],
    losses: &[TrueLoss],
    domain: &Domain,
    tol: f64,
) -> Result<f64> {
    let t = losses.len();
    check_weak_horizon(t)?;
    let rows: Vec<f64> = (1..=t)
        .into_par_iter()
        .map(|p| {
            let mut best = f64::NEG_INFINITY;
            for q in p..=t {
                let learner: f64 = trajectory[p - 1..q].iter().map(|r| r.loss).sum();
                let (_, comp) = offline_comparator(&losses[p - 1..q], domain, tol)?;
                best = best.max(learner - comp);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Interval to check, with the regime that holds on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub p: usize,
    pub q: usize,
    pub regime: Regime,
}

/// One row of a [`RegretReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub p: usize,
    pub q: usize,
    pub learner_cum_loss: f64,
    pub comparator_cum_loss: f64,
    pub regret: f64,
    pub bound: Option<f64>,
    pub regime: Regime,
}

impl IntervalRecord {
    pub fn tau(&self) -> usize {
        self.q - self.p + 1
    }

    pub fn violated(&self) -> bool {
        self.bound.is_some_and(|b| !(self.regret <= b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub p: usize,
    pub q: usize,
    pub regime: Regime,
    pub regret: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretReport {
    pub records: Vec<IntervalRecord>,
    /// `(tau, SA-Regret(T, tau))`
    pub strongly_adaptive: Vec<(usize, f64)>,
    pub weakly_adaptive: Option<f64>,
}

impl RegretReport {
    pub fn violations(&self) -> Vec<Violation> {
        self.records
            .iter()
            .filter(|r| r.violated())
            .map(|r| Violation { p: r.p, q: r.q, regime: r.regime, regret: r.regret, bound: r.bound.unwrap_or(f64::NAN) })
            .collect()
    }

    /// `p,q,tau,regret,bound,regime`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,q,tau,regret,bound,regime\n");
        for r in &self.records {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", r.p, r.q, r.tau(), r.regret, bound, r.regime.label());
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let checked = self.records.iter().filter(|r| r.bound.is_some()).count();
        let _ = writeln!(out, "intervals evaluated: {}", self.records.len());
        let _ = writeln!(out, "intervals with a bound: {checked}");
        let _ = writeln!(out, "bound violations: {}", self.violations().len());
        if let Some(worst) = self
            .records
            .iter()
            .filter_map(|r| r.bound.map(|b| (r, r.regret / b)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
        {
            let _ = writeln!(
                out,
                "tightest interval: [{},{}] regret {:.6} / bound {:.6} ({})",
                worst.0.p,
                worst.0.q,
                worst.0.regret,
                worst.0.bound.unwrap_or(f64::NAN),
                worst.0.regime.label()
            );
        }
        for (tau, v) in &self.strongly_adaptive {
            let _ = writeln!(out, "SA-Regret(T, {tau}) = {v:.6}");
        }
        if let Some(v) = self.weakly_adaptive {
            let _ = writeln!(out, "WA-Regret(T) = {v:.6}");
        }
        out
    }
}

/// Measures regret on every annotated interval and attaches the applicable bound.
pub fn evaluate_intervals(
    evaluator: &RegretEvaluator<'_>,
    annotations: &[Annotation],
    mode: Option<Mode>,
) -> Result<Vec<IntervalRecord>> {
    let domain = evaluator.domain;
    annotations
        .par_iter()
        .map(|ann| {
            let r = evaluator.interval(ann.p, ann.q)?;
            let values = bound_values(
                ann.p as u64,
                ann.q as u64,
                domain.dimension(),
                domain.diameter(),
                domain.gradient_bound(),
                Some(ann.regime),
            )?;
            Ok(IntervalRecord {
                p: ann.p,
                q: ann.q,
                learner_cum_loss: r.learner_cum_loss,
                comparator_cum_loss: r.comparator_cum_loss,
                regret: r.regret,
                bound: applicable_bound(&values, ann.regime, mode),
                regime: ann.regime,
            })
        })
        .collect()
}

/// Compares measured interval regret with the matching bound; an empty result means every bound held.
pub fn verify_bounds(
    trajectory: &[RoundRecord],
    losses: &[TrueLoss],
    domain: &Domain,
    annotations: &[Annotation],
    mode: Option<Mode>,
    tol: f64,
) -> Result<Vec<Violation>> {
    let evaluator = RegretEvaluator::new(trajectory, losses, domain, tol)?;
    let records = evaluate_intervals(&evaluator, annotations, mode)?;
    Ok(RegretReport { records, ..Default::default() }.violations())
}

/// Every covering interval that fits inside `[lo, hi]`.
pub fn covering_intervals_within(lo: usize, hi: usize) -> Vec<(usize, usize)> {
    (lo..=hi)
        .flat_map(|t| intervals_starting_at(t as u64))
        .map(|k| (k.start() as usize, k.end() as usize))
        .filter(|&(_, e)| e <= hi)
        .collect()
}

/// `count` distinct random intervals inside `[lo, hi]` that are not covering intervals.
pub fn random_non_covering_intervals<R: Rng + ?Sized>(lo: usize, hi: usize, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let gc: std::collections::BTreeSet<_> = covering_intervals_within(lo, hi).into_iter().collect();
    let available = (hi - lo + 1) * (hi - lo + 2) / 2 - gc.len();
    let mut out = std::collections::BTreeSet::new();
    while out.len() < count.min(available) {
        let a = rng.random_range(lo..=hi);
        let b = rng.random_range(lo..=hi);
        let iv = (a.min(b), a.max(b));
        if !gc.contains(&iv) {
            out.insert(iv);
        }
    }
    out.into_iter().collect()
}

/// Ingredients of the second-order interval bounds against one comparator `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderTerms {
    /// `sum <g_t, w_t - w>`
    pub linearized_regret: f64,
    /// `sum <g_t, w_t - w>^2`
    pub variance: f64,
    /// `sum ||w_t - w||^2`
    pub distance_sq: f64,
}

impl SecondOrderTerms {
    pub fn compute(trajectory: &[RoundRecord], p: usize, q: usize, w: &Vector) -> Self {
        let mut out = Self { linearized_regret: 0.0, variance: 0.0, distance_sq: 0.0 };
        for rec in &trajectory[p - 1..q] {
            let diff = &rec.decision - w;
            let gap = rec.gradient.dot(&diff);
            out.linearized_regret += gap;
            out.variance += gap * gap;
            out.distance_sq += diff.norm_squared();
        }
        out
    }

    /// `3 sqrt(a V) + 10 D G a` (ONS side) on a covering interval.
    pub fn exp_concave_bound(&self, p: u64, q: u64, d: usize, diameter: f64, g: f64) -> f64 {
        let a = a_fn(p, q, d);
        3.0 * (a * self.variance).sqrt() + 10.0 * diameter * g * a
    }

    /// `3 G sqrt(a_hat S) + 10 D G a_hat` (AOGD side) on a covering interval.
    pub fn strongly_convex_bound(&self, p: u64, q: u64, diameter: f64, g: f64) -> f64 {
        let a = a_hat_fn(p, q);
        3.0 * g * (a * self.distance_sq).sqrt() + 10.0 * diameter * g * a
    }
}

/// Step-size rule for the projected OGD baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// `D / (G sqrt(t))`
    General,
    /// `1 / (lambda t)`
    StronglyConvex { lambda: f64 },
}

/// Projected online gradient descent from the domain center.
pub fn baseline_ogd(losses: &[TrueLoss], domain: &Domain, rule: StepRule) -> Result<Vec<RoundRecord>> {
    if let StepRule::StronglyConvex { lambda } = rule {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
    }
    let mut w = domain.center();
    let mut out = Vec::with_capacity(losses.len());
    for (i, f) in losses.iter().enumerate() {
        let t = i + 1;
        let (loss, gradient) = f.eval(&w)?;
        let step = match rule {
            StepRule::General => domain.diameter() / (domain.gradient_bound() * (t as f64).sqrt()),
            StepRule::StronglyConvex { lambda } => 1.0 / (lambda * t as f64),
        };
        let next = domain.project(&(&w - &gradient * step))?;
        out.push(RoundRecord {
            round: t,
            decision: w,
            loss,
            gradient,
            n_active_ons: 0,
            n_active_aogd: 0,
            potential: None,
        });
        w = next;
    }
    Ok(out)
}
