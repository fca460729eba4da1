//! Universal adaptive-regret online convex optimization.
//!
//! A [`Learner`] aggregates per-interval experts with sleeping-expert
//! exponential weights. In [`Mode::Pae`] only online Newton step experts run;
//! [`Mode::Uma`] adds adaptive online gradient descent experts so one learner
//! adapts to general convex, exp-concave and strongly convex stretches alike.

pub mod domain;
pub mod error;
pub mod evaluation;
pub mod experts;
pub mod harness;
pub mod losses;
pub mod meta;
pub mod scenario;
pub mod schedule;
pub mod selftest;

pub use domain::{Domain, DomainKind, Matrix, Vector};
pub use error::{Error, Result};
pub use evaluation::{bound_values, BoundValues, Regime, RegretReport};
pub use experts::{AogdExpert, Expert, ExpertFamily, OnsExpert};
pub use losses::{LossObservation, TrueLoss};
pub use meta::{Learner, Mode, RoundRecord};
pub use schedule::IntervalKey;
