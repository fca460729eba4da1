//! Feasible sets and the two projection operators used by the experts.
//!
//! A [`Domain`] bundles the convex set with its diameter `D` and the
//! gradient bound `G` that every loss in a run must respect. `G` is
//! configuration: nothing here estimates it from data.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default first-order residual for [`Domain::project_generalized`].
pub const GENERALIZED_PROJECTION_TOL: f64 = 1e-8;
/// Iteration cap for the generalized projection solver.
pub const GENERALIZED_PROJECTION_MAX_ITERS: usize = 10_000;

// Points within this relative slack of the ball boundary count as inside, which
// makes the radial projection exactly idempotent.
const BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DomainKind {
    #[serde(rename = "ball")]
    L2Ball { center: Vec<f64>, radius: f64 },
    #[serde(rename = "box")]
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    dimension: usize,
    diameter: f64,
    gradient_bound: f64,
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64, gradient_bound: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("ball center must be finite".into()));
        }
        check_gradient_bound(gradient_bound)?;
        Ok(Self {
            dimension: center.len(),
            diameter: 2.0 * radius,
            kind: DomainKind::L2Ball { center, radius },
            gradient_bound,
        })
    }

    /// Ball of the given radius centred at the origin.
    pub fn centered_ball(dimension: usize, radius: f64, gradient_bound: f64) -> Result<Self> {
        Self::ball(vec![0.0; dimension], radius, gradient_bound)
    }

    pub fn cube(lower: Vec<f64>, upper: Vec<f64>, gradient_bound: f64) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        check_dim(lower.len(), upper.len())?;
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidArgument(format!(
                    "box bounds must satisfy lower <= upper, coordinate {i}: [{l}, {u}]"
                )));
            }
        }
        let diameter = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt();
        if diameter <= 0.0 {
            return Err(Error::InvalidArgument("box must have positive diameter".into()));
        }
        check_gradient_bound(gradient_bound)?;
        Ok(Self {
            dimension: lower.len(),
            kind: DomainKind::Box { lower, upper },
            diameter,
            gradient_bound,
        })
    }

    pub fn from_kind(kind: DomainKind, gradient_bound: f64) -> Result<Self> {
        match kind {
            DomainKind::L2Ball { center, radius } => Self::ball(center, radius, gradient_bound),
            DomainKind::Box { lower, upper } => Self::cube(lower, upper, gradient_bound),
        }
    }

    /// Same set, different `G`.
    pub fn with_gradient_bound(&self, gradient_bound: f64) -> Result<Self> {
        check_gradient_bound(gradient_bound)?;
        Ok(Self { gradient_bound, ..self.clone() })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    /// Largest learning rate for which the surrogate bounds hold, `1/(5GD)`.
    pub fn max_learning_rate(&self) -> f64 {
        1.0 / (5.0 * self.gradient_bound * self.diameter)
    }

    pub fn center(&self) -> Vector {
        match &self.kind {
            DomainKind::L2Ball { center, .. } => Vector::from_column_slice(center),
            DomainKind::Box { lower, upper } => {
                Vector::from_iterator(self.dimension, lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)))
            }
        }
    }

    /// Membership with an absolute tolerance.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.len() != self.dimension {
            return false;
        }
        match &self.kind {
            DomainKind::L2Ball { center, radius } => dist_to(x, center) <= radius + tol,
            DomainKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
        }
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dimension, x.len())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            DomainKind::L2Ball { center, radius } => {
                let dist = dist_to(x, center);
                if dist <= radius * (1.0 + BALL_SLACK) {
                    return x.clone();
                }
                let scale = radius / dist;
                Vector::from_iterator(
                    self.dimension,
                    x.iter().zip(center).map(|(v, c)| c + (v - c) * scale),
                )
            }
            DomainKind::Box { lower, upper } => Vector::from_iterator(
                self.dimension,
                x.iter().zip(lower.iter().zip(upper)).map(|(v, (l, u))| v.clamp(*l, *u)),
            ),
        }
    }

    fn contains_exact(&self, x: &Vector) -> bool {
        match &self.kind {
            DomainKind::L2Ball { center, radius } => dist_to(x, center) <= radius * (1.0 + BALL_SLACK),
            DomainKind::Box { .. } => self.contains(x, 0.0),
        }
    }

    /// Projection in the norm induced by a symmetric positive-definite `a`:
    /// `argmin_{w in domain} (w - x)^T a (w - x)`.
    ///
    /// Solved by projected gradient descent with step `1/(2 lambda_max(a))`,
    /// warm-started from the Euclidean projection, until the gradient-mapping
    /// norm drops to `tol`.
    pub fn project_generalized(&self, a: &Matrix, x: &Vector, tol: f64) -> Result<Vector> {
        check_dim(self.dimension, x.len())?;
        if a.nrows() != self.dimension || a.ncols() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: if a.nrows() != self.dimension { a.nrows() } else { a.ncols() },
            });
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let lambda_max = check_positive_definite(a)?;
        if self.contains_exact(x) {
            return Ok(x.clone());
        }

        let step = 1.0 / (2.0 * lambda_max);
        let mut w = self.project_unchecked(x);
        let mut residual = f64::INFINITY;
        for _ in 0..GENERALIZED_PROJECTION_MAX_ITERS {
            let grad = a * (&w - x) * 2.0;
            let next = self.project_unchecked(&(&w - &grad * step));
            residual = (&w - &next).norm() / step;
            w = next;
            if residual <= tol {
                return Ok(w);
            }
        }
        Err(Error::Convergence { iterations: GENERALIZED_PROJECTION_MAX_ITERS, residual })
    }

    /// `max_{w in domain} <x, w>`.
    pub fn support(&self, x: &Vector) -> f64 {
        match &self.kind {
            DomainKind::L2Ball { center, radius } => {
                x.iter().zip(center).map(|(a, c)| a * c).sum::<f64>() + radius * x.norm()
            }
            DomainKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(a, (l, u))| (a * l).max(a * u))
                .sum(),
        }
    }

    /// `max_{w in domain} ||w - c||`.
    pub fn max_distance_from(&self, c: &Vector) -> f64 {
        match &self.kind {
            DomainKind::L2Ball { center, radius } => dist_to(c, center) + radius,
            DomainKind::Box { lower, upper } => c
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (v - l).abs().max((u - v).abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Uniform sample from the domain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match &self.kind {
            DomainKind::L2Ball { center, radius } => {
                let dir = random_unit(self.dimension, rng);
                let r = radius * rng.random::<f64>().powf(1.0 / self.dimension as f64);
                Vector::from_iterator(self.dimension, dir.iter().zip(center).map(|(u, c)| c + r * u))
            }
            DomainKind::Box { lower, upper } => Vector::from_iterator(
                self.dimension,
                lower.iter().zip(upper).map(|(l, u)| l + (u - l) * rng.random::<f64>()),
            ),
        }
    }
}

/// Uniformly distributed unit vector.
pub fn random_unit<R: Rng + ?Sized>(dimension: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_iterator(dimension, (0..dimension).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn dist_to(x: &Vector, center: &[f64]) -> f64 {
    x.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>().sqrt()
}

fn check_gradient_bound(g: f64) -> Result<()> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("gradient bound G must be positive, got {g}")));
    }
    Ok(())
}

/// Returns the largest eigenvalue; errors unless `a` is symmetric positive definite.
fn check_positive_definite(a: &Matrix) -> Result<f64> {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if (a - a.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let eig = a.clone().symmetric_eigenvalues();
    let min = eig.min();
    let max = eig.max();
    if !(min > 0.0) || !max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "matrix is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(max)
}
