//! Seeded synthetic loss sequences built from regime segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{random_unit, Domain, DomainKind, Vector};
use crate::error::{Error, Result};
use crate::evaluation::{covering_intervals_within, random_non_covering_intervals, Annotation, Regime};
use crate::losses::TrueLoss;

/// Loss family of one segment and its generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `<a_t, w>` with `a_t = scale * u_t`, `u_t` uniform on the unit sphere.
    Linear { scale: f64 },
    /// `(lambda/2) ||w - c_t||^2` with `c_t = center + spread * (x_t - center)`, `x_t` uniform in the domain.
    Quadratic { lambda: f64, spread: f64 },
    /// `(<x_t, w> - y_t)^2` with `x_t = feature_scale * u_t` and
    /// `y_t = <x_t, w_star> + noise * N(0,1)`, one `w_star` per segment drawn from the domain.
    SquaredError { feature_scale: f64, noise: f64 },
}

impl FamilySpec {
    pub fn label(&self) -> &'static str {
        match self {
            FamilySpec::Linear { .. } => "linear",
            FamilySpec::Quadratic { .. } => "quadratic",
            FamilySpec::SquaredError { .. } => "squared_error",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Error::Config(format!("{} segment: `{name}` must be positive, got {v}", self.label()));
        let nonneg = |name: &str, v: f64| Error::Config(format!("{} segment: `{name}` must be non-negative, got {v}", self.label()));
        match *self {
            FamilySpec::Linear { scale } => (scale >= 0.0 && scale.is_finite()).then_some(()).ok_or_else(|| nonneg("scale", scale)),
            FamilySpec::Quadratic { lambda, spread } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(bad("lambda", lambda));
                }
                if !(0.0..=1.0).contains(&spread) {
                    return Err(Error::Config(format!("quadratic segment: `spread` must lie in [0, 1], got {spread}")));
                }
                Ok(())
            }
            FamilySpec::SquaredError { feature_scale, noise } => {
                if !(feature_scale > 0.0 && feature_scale.is_finite()) {
                    return Err(bad("feature_scale", feature_scale));
                }
                (noise >= 0.0 && noise.is_finite()).then_some(()).ok_or_else(|| nonneg("noise", noise))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub length: usize,
    #[serde(flatten)]
    pub family: FamilySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub domain: DomainKind,
    /// Declared gradient bound; must not be below the value derived from the segments.
    pub gradient_bound: Option<f64>,
    pub segments: Vec<SegmentSpec>,
}

impl ScenarioSpec {
    pub fn horizon(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Round range `[start, end]` (1-based, inclusive) of one segment and the regime that holds there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub start: usize,
    pub end: usize,
    #[serde(flatten)]
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    /// Domain carrying the gradient bound `G` in force for the whole run.
    pub domain: Domain,
    pub losses: Vec<TrueLoss>,
    pub segments: Vec<SegmentMeta>,
    /// `max_t max_{w in domain} ||grad f_t(w)||`
    pub derived_gradient_bound: f64,
}

impl Scenario {
    pub fn horizon(&self) -> usize {
        self.losses.len()
    }

    pub fn regime_at(&self, t: usize) -> Option<Regime> {
        self.segments.iter().find(|s| s.start <= t && t <= s.end).map(|s| s.regime)
    }

    /// Regime of `[p, q]`: the segment's when it lies inside one segment, general convex otherwise.
    pub fn regime_of(&self, p: usize, q: usize) -> Regime {
        match self.segments.iter().find(|s| s.start <= p && p <= s.end) {
            Some(s) if q <= s.end => s.regime,
            _ => Regime::GeneralConvex,
        }
    }

    pub fn annotate(&self, intervals: &[(usize, usize)]) -> Vec<Annotation> {
        intervals.iter().map(|&(p, q)| Annotation { p, q, regime: self.regime_of(p, q) }).collect()
    }

    /// Every covering interval inside `[1, T]`, plus `random` distinct other intervals drawn with `seed`.
    pub fn standard_annotations(&self, random: usize, seed: u64) -> Vec<Annotation> {
        let t = self.horizon();
        if t == 0 {
            return Vec::new();
        }
        let mut intervals = covering_intervals_within(1, t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        intervals.extend(random_non_covering_intervals(1, t, random, &mut rng));
        self.annotate(&intervals)
    }

    /// Smallest exp-concavity modulus over the exp-concave segments.
    pub fn min_alpha(&self) -> Option<f64> {
        self.segments
            .iter()
            .filter_map(|s| match s.regime {
                Regime::ExpConcave { alpha } => Some(alpha),
                _ => None,
            })
            .reduce(f64::min)
    }
}

/// Draws the loss sequence. Deterministic in `spec`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    if spec.segments.is_empty() {
        return Err(Error::Config("scenario needs at least one segment".into()));
    }
    // gradient bound is fixed below; use a placeholder to get geometry checks
    let geometry = Domain::from_kind(spec.domain.clone(), 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let d = geometry.dimension();
    let center = geometry.center();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut losses = Vec::with_capacity(spec.horizon());
    let mut segments = Vec::with_capacity(spec.segments.len());
    for (k, seg) in spec.segments.iter().enumerate() {
        if seg.length == 0 {
            return Err(Error::Config(format!("segment {k} has length 0")));
        }
        seg.family.validate()?;
        let start = losses.len() + 1;
        let mut alpha = f64::INFINITY;
        let w_star = geometry.sample(&mut rng);
        for _ in 0..seg.length {
            let loss = match seg.family {
                FamilySpec::Linear { scale } => TrueLoss::Linear { a: vec_of(random_unit(d, &mut rng) * scale) },
                FamilySpec::Quadratic { lambda, spread } => {
                    let x = geometry.sample(&mut rng);
                    TrueLoss::Quadratic { center: vec_of(&center + (x - &center) * spread), modulus: lambda }
                }
                FamilySpec::SquaredError { feature_scale, noise } => {
                    let x = random_unit(d, &mut rng) * feature_scale;
                    let eps: f64 = rng.sample(StandardNormal);
                    let loss = TrueLoss::SquaredError { target: x.dot(&w_star) + noise * eps, feature: vec_of(x) };
                    alpha = alpha.min(loss.exp_concavity(&geometry).unwrap_or(f64::INFINITY));
                    loss
                }
            };
            losses.push(loss);
        }
        let regime = match seg.family {
            FamilySpec::Linear { .. } => Regime::GeneralConvex,
            FamilySpec::Quadratic { lambda, .. } => Regime::StronglyConvex { lambda },
            FamilySpec::SquaredError { .. } => Regime::ExpConcave { alpha },
        };
        segments.push(SegmentMeta { start, end: losses.len(), regime });
    }
    let derived = losses.iter().map(|f| f.max_gradient_norm(&geometry)).fold(0.0, f64::max);
    let g = match spec.gradient_bound {
        Some(g) if g < derived => {
            return Err(Error::Config(format!(
                "gradient_bound = {g} is below the largest gradient norm the scenario can produce ({derived})"
            )))
        }
        Some(g) => g,
        None if derived > 0.0 => derived,
        None => {
            return Err(Error::Config(
                "every loss has zero gradient on the domain; set `gradient_bound` explicitly".into(),
            ))
        }
    };
    let domain = geometry.with_gradient_bound(g).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Scenario { spec: spec.clone(), domain, losses, segments, derived_gradient_bound: derived })
}

fn vec_of(v: Vector) -> Vec<f64> {
    v.as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball2() -> DomainKind {
        DomainKind::L2Ball { center: vec![0.0, 0.0], radius: 1.0 }
    }

    fn three_segment(seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            seed,
            domain: ball2(),
            gradient_bound: None,
            segments: vec![
                SegmentSpec { length: 10, family: FamilySpec::Linear { scale: 1.0 } },
                SegmentSpec { length: 5, family: FamilySpec::SquaredError { feature_scale: 1.0, noise: 0.1 } },
                SegmentSpec { length: 7, family: FamilySpec::Quadratic { lambda: 2.0, spread: 0.5 } },
            ],
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let a = generate_scenario(&three_segment(3)).unwrap();
        let b = generate_scenario(&three_segment(3)).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&three_segment(4)).unwrap();
        assert_ne!(a.losses, c.losses);
    }

    #[test]
    fn all_linear_spec() {
        let spec = ScenarioSpec {
            seed: 1,
            domain: ball2(),
            gradient_bound: None,
            segments: vec![SegmentSpec { length: 10, family: FamilySpec::Linear { scale: 0.5 } }],
        };
        let s = generate_scenario(&spec).unwrap();
        assert_eq!(s.losses.len(), 10);
        assert!(s.losses.iter().all(|f| matches!(f, TrueLoss::Linear { .. })));
        assert!((s.domain.gradient_bound() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn segment_metadata_ranges() {
        let s = generate_scenario(&three_segment(9)).unwrap();
        assert_eq!(s.horizon(), 22);
        let spans: Vec<_> = s.segments.iter().map(|m| (m.start, m.end, m.regime.label())).collect();
        assert_eq!(spans, vec![(1, 10, "general_convex"), (11, 15, "exp_concave"), (16, 22, "strongly_convex")]);
        assert!(matches!(s.losses[10], TrueLoss::SquaredError { .. }));
        assert!(matches!(s.losses[15], TrueLoss::Quadratic { .. }));
        assert_eq!(s.regime_of(12, 15).label(), "exp_concave");
        assert_eq!(s.regime_of(12, 16), Regime::GeneralConvex);
        assert_eq!(s.regime_of(16, 22), Regime::StronglyConvex { lambda: 2.0 });
        // recorded alpha is the smallest per-round modulus
        let alpha = s.min_alpha().unwrap();
        let direct = s.losses[10..15].iter().map(|f| f.exp_concavity(&s.domain).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(alpha, direct);
    }

    #[test]
    fn gradient_bound_covers_every_loss() {
        let s = generate_scenario(&three_segment(5)).unwrap();
        let g = s.domain.gradient_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for f in &s.losses {
            assert!(f.max_gradient_norm(&s.domain) <= g);
            for _ in 0..20 {
                assert!(f.eval(&s.domain.sample(&mut rng)).unwrap().1.norm() <= g + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = three_segment(1);
        spec.gradient_bound = Some(1e-3);
        assert!(matches!(generate_scenario(&spec), Err(Error::Config(_))));
        let mut spec = three_segment(1);
        spec.segments[2].length = 0;
        assert!(generate_scenario(&spec).is_err());
        let mut spec = three_segment(1);
        spec.segments[2].family = FamilySpec::Quadratic { lambda: -1.0, spread: 0.5 };
        assert!(generate_scenario(&spec).is_err());
        let spec = ScenarioSpec {
            seed: 0,
            domain: ball2(),
            gradient_bound: None,
            segments: vec![SegmentSpec { length: 3, family: FamilySpec::Linear { scale: 0.0 } }],
        };
        assert!(generate_scenario(&spec).is_err());
    }

    #[test]
    fn standard_annotations_cover_gc_and_random() {
        let s = generate_scenario(&three_segment(2)).unwrap();
        let anns = s.standard_annotations(20, 7);
        let gc = covering_intervals_within(1, 22);
        assert_eq!(anns.len(), gc.len() + 20);
        assert!(anns.iter().all(|a| a.p >= 1 && a.p <= a.q && a.q <= 22));
    }
}
