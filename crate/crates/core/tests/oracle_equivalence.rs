#[path = "support/oracle.rs"]
mod oracle;

use oracle::{cycle_oracle, fates_from_log, random_instance, HashPolicy};
use relmas_core::sim::{run_trace, RunOptions};
use relmas_core::workload::RequestTrace;

#[test]
fn event_engine_matches_cycle_stepping() {
    let (mut with_drops, mut contended, mut multi_period) = (0, 0, 0);
    for seed in 0..1000 {
        let inst = random_instance(seed);
        let trace = RequestTrace { jobs: inst.jobs.clone() };
        let mut policy = HashPolicy { salt: inst.salt };
        let run = run_trace(&inst.cfg, &inst.table, &trace, &mut policy, inst.period, &RunOptions { record_log: true })
            .unwrap();
        let engine = fates_from_log(&run.log);
        let expected = cycle_oracle(inst.cfg.dram_bandwidth(), &inst.table, &inst.jobs, inst.period, inst.salt);
        assert_eq!(engine, expected, "seed {seed}");
        with_drops += engine.values().any(|f| *f == oracle::Fate::Dropped) as usize;
        contended += stalls(&inst) as usize;
        multi_period += (run.rq_lengths.len() > 1) as usize;
    }
    assert!(with_drops > 100, "{with_drops}");
    assert!(contended > 100, "{contended}");
    assert!(multi_period > 300, "{multi_period}");
}

/// Whether two SAs' layers together can exceed the bandwidth.
fn stalls(inst: &oracle::Instance) -> bool {
    let b = oracle::to_f64(inst.cfg.dram_bandwidth());
    let mut max_bw = vec![0.0f64; inst.table.num_sas()];
    for m in 0..inst.table.num_models() {
        for l in 0..inst.table.num_layers(m).unwrap() {
            for (sa, c) in inst.table.layer_costs(m, l).iter().enumerate() {
                max_bw[sa] = max_bw[sa].max(c.bandwidth_f64());
            }
        }
    }
    max_bw.iter().sum::<f64>() > b || max_bw.iter().any(|&x| x > b)
}

#[test]
fn oracle_reproduces_contention_example() {
    use relmas_core::cost::{CostTable, LayerCost};
    use relmas_core::model::{Job, QosLevel};
    let c = LayerCost { cycles: 100, bytes: 1000, energy_pj: 0.0 };
    let table = CostTable::from_entries(vec!["m".into()], vec![vec![vec![c, c]]]).unwrap();
    let jobs: Vec<Job> = (0..2).map(|i| Job::new(i, 0, 0, 10_000, QosLevel::Medium).unwrap()).collect();
    // find a salt that puts the two jobs on different SAs
    let salt = (0..)
        .find(|&s| {
            let e = |j| relmas_core::model::ReadyEntry { job_id: j, model_id: 0, layer: 0, arrival: 0, qos_latency: 10_000 };
            oracle::hash_decision(s, 0, &e(0), 2).sa != oracle::hash_decision(s, 0, &e(1), 2).sa
        })
        .unwrap();
    let fates = cycle_oracle(&oracle::q(16), &table, &jobs, 1000, salt);
    assert!(fates.values().all(|f| *f == oracle::Fate::Finished(125)));
}
