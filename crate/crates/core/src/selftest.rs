//! Quick invariant checks for the `selftest` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{random_unit, Domain, DomainKind};
use crate::losses::{surrogate_exp, surrogate_exp_grad, surrogate_sc, surrogate_sc_grad, LossObservation};
use crate::meta::Learner;
use crate::scenario::{generate_scenario, FamilySpec, ScenarioSpec, SegmentSpec};
use crate::schedule::{intervals_containing, partition_interval};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: std::result::Result<String, String>) -> CheckResult {
    match result {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

fn surrogate_gradients(rng: &mut ChaCha8Rng) -> std::result::Result<String, String> {
    let domain = Domain::centered_ball(3, 1.0, 1.0).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let g = random_unit(3, rng) * rng.random_range(0.05..1.0);
        let obs = LossObservation::new(1, domain.sample(rng), g).map_err(|e| e.to_string())?;
        let eta = domain.max_learning_rate() * rng.random_range(0.01..1.0);
        let w = domain.sample(rng);
        let pairs: [(fn(f64, &LossObservation, &crate::Vector) -> crate::Result<f64>, fn(f64, &LossObservation, &crate::Vector) -> crate::Result<crate::Vector>); 2] =
            [(surrogate_exp, surrogate_exp_grad), (surrogate_sc, surrogate_sc_grad)];
        for (f, grad) in pairs {
            let an = grad(eta, &obs, &w).map_err(|e| e.to_string())?;
            for i in 0..3 {
                let (mut up, mut dn) = (w.clone(), w.clone());
                up[i] += h;
                dn[i] -= h;
                let fd = (f(eta, &obs, &up).map_err(|e| e.to_string())? - f(eta, &obs, &dn).map_err(|e| e.to_string())?) / (2.0 * h);
                worst = worst.max((fd - an[i]).abs() / an.norm());
            }
        }
        let gap = surrogate_sc(eta, &obs, &w).map_err(|e| e.to_string())? - surrogate_exp(eta, &obs, &w).map_err(|e| e.to_string())?;
        if gap < -1e-12 {
            return Err(format!("surrogate ordering violated by {gap:e}"));
        }
    }
    if worst > 1e-6 {
        return Err(format!("relative gradient error {worst:e}"));
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn schedule() -> std::result::Result<String, String> {
    for t in 1..=4096u64 {
        if intervals_containing(t).len() as u32 != t.ilog2() + 1 {
            return Err(format!("wrong interval count at t = {t}"));
        }
    }
    for q in 1..=64u64 {
        for p in 1..=q {
            let (left, right) = partition_interval(p, q).map_err(|e| e.to_string())?;
            let covered: u64 = left.iter().chain(&right).map(|k| k.len()).sum();
            let cap = crate::schedule::ceil_log2(q - p + 2) as usize;
            if covered != q - p + 1 || left.len() > cap || right.len() > cap {
                return Err(format!("bad partition of [{p},{q}]"));
            }
        }
    }
    Ok("t <= 4096, partitions q <= 64".into())
}

fn learner_invariants() -> std::result::Result<String, String> {
    let spec = ScenarioSpec {
        seed: 1,
        domain: DomainKind::L2Ball { center: vec![0.0, 0.0], radius: 1.0 },
        gradient_bound: None,
        segments: vec![
            SegmentSpec { length: 64, family: FamilySpec::Linear { scale: 1.0 } },
            SegmentSpec { length: 64, family: FamilySpec::SquaredError { feature_scale: 1.0, noise: 0.1 } },
            SegmentSpec { length: 64, family: FamilySpec::Quadratic { lambda: 1.0, spread: 1.0 } },
        ],
    };
    let s = generate_scenario(&spec).map_err(|e| e.to_string())?;
    let mut learner = Learner::uma(s.domain.clone()).with_audit();
    let traj = learner.run(&s.losses).map_err(|e| e.to_string())?;
    for r in &traj {
        if !s.domain.contains(&r.decision, 1e-8) {
            return Err(format!("round {}: decision outside the domain", r.round));
        }
    }
    let audit = learner.audit().ok_or("audit missing")?;
    for p in &audit.potentials {
        if p.after > p.before + 1e-9 || p.cumulative > p.created as f64 + 1e-9 {
            return Err(format!("round {}: potential check failed", p.round));
        }
    }
    for r in &audit.retirements {
        if -r.cumulative_loss > 2.0 * (2.0 * r.interval.end() as f64).log2() + 1e-9 {
            return Err(format!("meta-regret bound failed for {}", r.interval));
        }
    }
    Ok(format!("{} rounds, {} retirements", traj.len(), audit.retirements.len()))
}

/// Runs every check; all of them finish in well under a second in release builds.
pub fn run_all() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    vec![
        check("surrogate gradients and ordering", surrogate_gradients(&mut rng)),
        check("covering schedule", schedule()),
        check("learner invariants", learner_invariants()),
    ]
}
