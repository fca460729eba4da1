use dualadapt::domain::{DomainKind, Vector};
use dualadapt::evaluation::{
    evaluate_intervals, offline_comparator, verify_bounds, weakly_adaptive_regret_brute, Regime, RegretEvaluator,
    COMPARATOR_TOL,
};
use dualadapt::meta::{Learner, Mode, RoundRecord};
use dualadapt::scenario::{generate_scenario, FamilySpec, Scenario, ScenarioSpec, SegmentSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scenario(seed: u64, kind: DomainKind, lengths: [usize; 3]) -> Scenario {
    generate_scenario(&ScenarioSpec {
        seed,
        domain: kind,
        gradient_bound: None,
        segments: vec![
            SegmentSpec { length: lengths[0], family: FamilySpec::SquaredError { feature_scale: 1.0, noise: 0.1 } },
            SegmentSpec { length: lengths[1], family: FamilySpec::Quadratic { lambda: 1.0, spread: 0.5 } },
            SegmentSpec { length: lengths[2], family: FamilySpec::Linear { scale: 0.5 } },
        ],
    })
    .unwrap()
}

fn ball() -> DomainKind {
    DomainKind::L2Ball { center: vec![0.0, 0.0], radius: 1.0 }
}

fn cube() -> DomainKind {
    DomainKind::Box { lower: vec![-1.0, -0.5, 0.0], upper: vec![1.0, 0.5, 1.0] }
}

/// The trajectory that plays `point` every round, with losses recomputed there.
fn fixed_point_trajectory(s: &Scenario, point: &Vector) -> Vec<RoundRecord> {
    s.losses
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let (loss, gradient) = f.eval(point).unwrap();
            RoundRecord {
                round: i + 1,
                decision: point.clone(),
                loss,
                gradient,
                n_active_ons: 0,
                n_active_aogd: 0,
                potential: None,
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn report_rows_are_consistent(seed in any::<u64>(), use_cube in any::<bool>()) {
        let s = scenario(seed, if use_cube { cube() } else { ball() }, [20, 20, 20]);
        let traj = Learner::uma(s.domain.clone()).run(&s.losses).unwrap();
        let eval = RegretEvaluator::new(&traj, &s.losses, &s.domain, COMPARATOR_TOL).unwrap();
        let records = evaluate_intervals(&eval, &s.standard_annotations(30, seed), Some(Mode::Uma)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes: Vec<Vector> = (0..64).map(|_| s.domain.sample(&mut rng)).collect();
        for r in &records {
            prop_assert_eq!(r.regret, r.learner_cum_loss - r.comparator_cum_loss);
            let learner: f64 = traj[r.p - 1..r.q].iter().map(|x| x.loss).sum();
            prop_assert!((learner - r.learner_cum_loss).abs() <= 1e-9 * (1.0 + learner.abs()));
            let losses = &s.losses[r.p - 1..r.q];
            for w in &probes {
                let at_w: f64 = losses.iter().map(|f| f.value(w).unwrap()).sum();
                prop_assert!(r.comparator_cum_loss <= at_w + COMPARATOR_TOL * r.tau() as f64);
            }
        }
    }
}

#[test]
fn correct_runs_respect_every_bound() {
    for (seed, kind) in [(1, ball()), (2, cube()), (3, DomainKind::L2Ball { center: vec![3.0], radius: 0.5 })] {
        let s = scenario(seed, kind, [90, 80, 70]);
        let anns = s.standard_annotations(200, seed);
        for mode in [Mode::Uma, Mode::Pae] {
            let traj = Learner::new(mode, s.domain.clone()).run(&s.losses).unwrap();
            let v = verify_bounds(&traj, &s.losses, &s.domain, &anns, Some(mode), COMPARATOR_TOL).unwrap();
            assert!(v.is_empty(), "{mode:?}: {v:?}");
        }
    }
}

#[test]
fn a_far_fixed_point_violates_strongly_convex_bounds() {
    let s = scenario(4, ball(), [64, 64, 64]);
    let far = Vector::from_column_slice(&[100.0, 100.0]);
    let traj = fixed_point_trajectory(&s, &far);
    let v = verify_bounds(&traj, &s.losses, &s.domain, &s.standard_annotations(50, 4), Some(Mode::Uma), COMPARATOR_TOL)
        .unwrap();
    assert!(v.iter().any(|x| matches!(x.regime, Regime::StronglyConvex { .. })), "{v:?}");
    assert!(v.iter().all(|x| x.regret > x.bound));
}

#[test]
fn whole_horizon_window_is_static_regret() {
    let s = scenario(6, cube(), [16, 16, 16]);
    let traj = Learner::uma(s.domain.clone()).run(&s.losses).unwrap();
    let eval = RegretEvaluator::new(&traj, &s.losses, &s.domain, COMPARATOR_TOL).unwrap();
    let sa = eval.strongly_adaptive(s.horizon()).unwrap();
    let (_, best) = offline_comparator(&s.losses, &s.domain, COMPARATOR_TOL).unwrap();
    let learner: f64 = traj.iter().map(|r| r.loss).sum();
    assert!((sa.regret - (learner - best)).abs() <= 1e-6, "{} vs {}", sa.regret, learner - best);
}

#[test]
fn weak_regret_dominates_every_window_and_matches_brute_force() {
    let s = scenario(8, ball(), [12, 12, 12]);
    let traj = Learner::pae(s.domain.clone()).run(&s.losses).unwrap();
    let eval = RegretEvaluator::new(&traj, &s.losses, &s.domain, COMPARATOR_TOL).unwrap();
    let weak = eval.weakly_adaptive().unwrap().regret;
    let mut last = f64::NEG_INFINITY;
    for tau in 1..=s.horizon() {
        let sa = eval.strongly_adaptive(tau).unwrap().regret;
        assert!(sa <= weak);
        last = last.max(sa);
    }
    assert_eq!(last, weak);
    let brute = weakly_adaptive_regret_brute(&traj, &s.losses, &s.domain, COMPARATOR_TOL).unwrap();
    assert!((brute - weak).abs() <= 1e-6, "{brute} vs {weak}");
}

#[test]
fn baseline_has_no_bound() {
    let s = scenario(9, ball(), [10, 10, 10]);
    let traj = Learner::uma(s.domain.clone()).run(&s.losses).unwrap();
    let eval = RegretEvaluator::new(&traj, &s.losses, &s.domain, COMPARATOR_TOL).unwrap();
    let records = evaluate_intervals(&eval, &s.standard_annotations(10, 0), None).unwrap();
    assert!(records.iter().all(|r| r.bound.is_none()));
}
