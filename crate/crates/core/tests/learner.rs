use dualadapt::domain::{Domain, DomainKind, Vector};
use dualadapt::evaluation::{covering_intervals_within, SecondOrderTerms};
use dualadapt::experts::ExpertFamily;
use dualadapt::harness::trajectory_csv;
use dualadapt::meta::{Learner, Mode};
use dualadapt::scenario::{generate_scenario, FamilySpec, Scenario, ScenarioSpec, SegmentSpec};
use dualadapt::schedule::{grid_size, intervals_containing};
use dualadapt::{Error, TrueLoss};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mixed(seed: u64, domain: DomainKind, len: usize) -> Scenario {
    generate_scenario(&ScenarioSpec {
        seed,
        domain,
        gradient_bound: None,
        segments: vec![
            SegmentSpec { length: len, family: FamilySpec::Linear { scale: 1.0 } },
            SegmentSpec { length: len, family: FamilySpec::SquaredError { feature_scale: 1.0, noise: 0.2 } },
            SegmentSpec { length: len, family: FamilySpec::Quadratic { lambda: 1.0, spread: 1.0 } },
        ],
    })
    .unwrap()
}

fn domain_kinds() -> Vec<DomainKind> {
    vec![
        DomainKind::L2Ball { center: vec![0.0, 0.0], radius: 1.0 },
        DomainKind::L2Ball { center: vec![1.0, -2.0, 0.5], radius: 2.0 },
        DomainKind::Box { lower: vec![-1.0, 0.0], upper: vec![0.5, 2.0] },
    ]
}

fn expected_active(t: u64, mode: Mode) -> usize {
    let per_family: usize = intervals_containing(t).iter().map(|k| grid_size(k.len())).sum();
    match mode {
        Mode::Pae => per_family,
        Mode::Uma => 2 * per_family,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn prediction_is_the_tilted_average_of_awake_experts(seed in any::<u64>(), which in 0usize..3, uma in any::<bool>()) {
        let s = mixed(seed, domain_kinds()[which].clone(), 24);
        let mode = if uma { Mode::Uma } else { Mode::Pae };
        let mut learner = Learner::new(mode, s.domain.clone());
        for f in &s.losses {
            learner.begin_round().unwrap();
            let (mut num, mut den) = (Vector::zeros(s.domain.dimension()), 0.0);
            for e in learner.experts() {
                let weight = (-e.cumulative_loss()).exp() * e.eta();
                num += e.decision() * weight;
                den += weight;
            }
            let expected = num / den;
            let got = learner.predict().unwrap();
            prop_assert!((&got - &expected).norm() <= 1e-12 * (1.0 + expected.norm()));
            prop_assert!(s.domain.contains(&got, 1e-8));
            learner.observe(f).unwrap();
        }
    }

    #[test]
    fn potential_never_grows(seed in any::<u64>(), which in 0usize..3) {
        let s = mixed(seed, domain_kinds()[which].clone(), 40);
        let mut learner = Learner::uma(s.domain.clone()).with_audit();
        learner.run(&s.losses).unwrap();
        let audit = learner.audit().unwrap();
        prop_assert_eq!(audit.potentials.len(), s.horizon());
        for p in &audit.potentials {
            prop_assert!(p.after <= p.before + 1e-9, "round {}: {} > {}", p.round, p.after, p.before);
            prop_assert!(p.cumulative <= p.created as f64 + 1e-9);
        }
        for r in &audit.retirements {
            prop_assert!(-r.cumulative_loss <= 2.0 * (2.0 * r.interval.end() as f64).log2() + 1e-9);
        }
    }
}

#[test]
fn active_counts_follow_the_schedule() {
    let s = mixed(4, domain_kinds()[0].clone(), 100);
    let uma = Learner::uma(s.domain.clone()).run(&s.losses).unwrap();
    let pae = Learner::pae(s.domain.clone()).run(&s.losses).unwrap();
    for (u, p) in uma.iter().zip(&pae) {
        let t = u.round as u64;
        assert_eq!(u.n_active_ons + u.n_active_aogd, expected_active(t, Mode::Uma));
        assert_eq!(u.n_active_ons, u.n_active_aogd);
        assert_eq!(p.n_active_ons, expected_active(t, Mode::Pae));
        assert_eq!(p.n_active_aogd, 0);
        assert_eq!(u.n_active_ons + u.n_active_aogd, 2 * (p.n_active_ons + p.n_active_aogd));
    }
}

#[test]
fn active_set_is_empty_after_each_power_of_two_minus_one() {
    let s = mixed(2, domain_kinds()[0].clone(), 21);
    let mut learner = Learner::uma(s.domain.clone());
    for (i, f) in s.losses.iter().enumerate() {
        learner.step(f).unwrap();
        let t = i + 1;
        if (t + 1).is_power_of_two() {
            assert!(learner.experts().is_empty(), "round {t}");
        } else {
            assert_eq!(learner.active_count(ExpertFamily::Ons), learner.active_count(ExpertFamily::Aogd));
        }
    }
}

#[test]
fn second_order_bounds_hold_on_covering_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for kind in domain_kinds() {
        let s = mixed(9, kind, 43);
        let (d, diam, g) = (s.domain.dimension(), s.domain.diameter(), s.domain.gradient_bound());
        let comparators: Vec<Vector> = (0..200).map(|_| s.domain.sample(&mut rng)).collect();
        for mode in [Mode::Pae, Mode::Uma] {
            let traj = Learner::new(mode, s.domain.clone()).run(&s.losses).unwrap();
            let mut checked = 0;
            for (p, q) in covering_intervals_within(1, traj.len()) {
                if q > 128 {
                    continue;
                }
                for w in &comparators {
                    let terms = SecondOrderTerms::compute(&traj, p, q, w);
                    let ons = terms.exp_concave_bound(p as u64, q as u64, d, diam, g);
                    assert!(terms.linearized_regret <= ons + 1e-9, "{mode:?} [{p},{q}]: {} > {ons}", terms.linearized_regret);
                    if mode == Mode::Uma {
                        let aogd = terms.strongly_convex_bound(p as u64, q as u64, diam, g);
                        assert!(terms.linearized_regret <= aogd + 1e-9, "[{p},{q}]: {} > {aogd}", terms.linearized_regret);
                    }
                    checked += 1;
                }
            }
            assert!(checked >= 200 * 60);
        }
    }
}

#[test]
fn trajectory_csv_is_byte_identical_across_runs() {
    for kind in domain_kinds() {
        let s = mixed(5, kind, 30);
        let csv = || {
            let traj = Learner::uma(s.domain.clone()).with_audit().run(&s.losses).unwrap();
            trajectory_csv(&traj, s.domain.dimension()).unwrap()
        };
        assert_eq!(csv().into_bytes(), csv().into_bytes());
    }
}

#[test]
fn short_linear_run() {
    let domain = Domain::centered_ball(2, 1.0, 1.0).unwrap();
    let losses: Vec<TrueLoss> = (0..8).map(|i| TrueLoss::Linear { a: vec![(i as f64).cos(), (i as f64).sin()] }).collect();
    let traj = Learner::pae(domain.clone()).run(&losses).unwrap();
    assert_eq!(traj.len(), 8);
    assert_eq!(traj[0].decision, domain.center());
    assert!(traj.iter().all(|r| r.loss.is_finite() && domain.contains(&r.decision, 1e-8)));
}

#[test]
fn gradient_above_declared_bound_is_rejected() {
    let domain = Domain::centered_ball(2, 1.0, 1.0).unwrap();
    let mut learner = Learner::uma(domain);
    let err = learner.step(&TrueLoss::Linear { a: vec![3.0, 0.0] }).unwrap_err();
    assert!(matches!(err, Error::GradientBound { round: 1, .. }), "{err}");
}
