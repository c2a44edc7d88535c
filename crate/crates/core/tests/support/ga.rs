//! GA-versus-enumeration harness. Needs `oracle` declared at the crate root.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relmas_core::agent::reward::{sla_score, RewardCoefficients};
use relmas_core::cost::{CostTable, LayerCost};
use relmas_core::model::{Job, MasConfig, QosLevel};
use relmas_core::sched::{magma_ga, MagmaConfig, SchedEnv};
use relmas_core::sim::Engine;

/// Six ready sub-jobs on two SAs with deadlines tight enough to conflict.
pub fn instance(seed: u64) -> (MasConfig, CostTable, Vec<Job>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splits: [&[usize]; 4] = [&[2, 2, 2], &[3, 3], &[1, 2, 3], &[1, 1, 2, 2]];
    let split = splits[rng.random_range(0..splits.len())];
    let mut costs = Vec::new();
    for &layers in split {
        costs.push(
            (0..layers)
                .map(|_| {
                    (0..2)
                        .map(|_| LayerCost {
                            cycles: rng.random_range(5..=40),
                            bytes: rng.random_range(0..=500),
                            energy_pj: 1.0,
                        })
                        .collect()
                })
                .collect::<Vec<_>>(),
        );
    }
    let names = (0..split.len()).map(|i| format!("m{i}")).collect();
    let table = CostTable::from_entries(names, costs).unwrap();
    let jobs = (0..split.len())
        .map(|i| Job::new(i as u64, i, 0, rng.random_range(20..=90), QosLevel::Medium).unwrap())
        .collect();
    let cfg = crate::oracle::small_mas(2, crate::oracle::q(rng.random_range(8..=24)));
    (cfg, table, jobs)
}

/// Returns (GA best, exhaustive optimum).
pub fn ga_vs_exhaustive(seed: u64, generations: usize) -> (f64, f64) {
    let (cfg, table, jobs) = instance(seed);
    let mut engine = Engine::new(&cfg, &table);
    for j in jobs {
        engine.admit(j, &mut |_| {}).unwrap();
    }
    let snapshot = engine.snapshot();
    assert_eq!(snapshot.ready_queue.len(), 6);
    let coeffs = RewardCoefficients::default();
    let (optimum, distinct) = crate::oracle::enumerate_schedules(6, 2, |d| {
        let p = engine.project(d).unwrap();
        sla_score(&coeffs, &p.ready_queue, &p.outcomes)
    });
    assert_eq!(distinct, 5040);
    let env = SchedEnv { cfg: &cfg, table: &table, engine: &engine, period: 50 };
    let ga_cfg = MagmaConfig { population: 100, generations, seed, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = magma_ga(&snapshot, &env, &ga_cfg, &mut rng).unwrap();
    assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    (out.best_fitness, optimum)
}
