//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the event engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relmas_core::cost::{CostTable, LayerCost};
use relmas_core::model::{Cycles, Dataflow, Decision, Job, MasConfig, QosLevel, ReadyEntry, SaSpec};
use relmas_core::sched::{SchedEnv, SchedError, Scheduler};

pub type Q = BigRational;

pub fn q(n: u64) -> Q {
    Q::from_integer(n.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fate {
    Finished(Cycles),
    Dropped,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stateless pseudo-random policy: a pure function of the invocation time
/// and the entry, so the oracle and the engine see identical decisions.
pub fn hash_decision(salt: u64, now: Cycles, e: &ReadyEntry, num_sas: usize) -> Decision {
    let h = splitmix(salt ^ splitmix(e.job_id.wrapping_mul(31).wrapping_add(e.layer as u64)) ^ splitmix(now));
    let priority = ((h >> 11) % 2001) as f64 / 1000.0 - 1.0;
    let sa = (splitmix(h) % num_sas as u64) as usize;
    Decision { priority, sa }
}

pub struct HashPolicy {
    pub salt: u64,
}

impl Scheduler for HashPolicy {
    fn name(&self) -> String {
        "hash".into()
    }

    fn schedule(
        &mut self,
        snapshot: &relmas_core::SystemSnapshot,
        env: &SchedEnv<'_>,
    ) -> Result<Vec<Decision>, SchedError> {
        let m = env.cfg.num_sas();
        Ok(snapshot.ready_queue.iter().map(|e| hash_decision(self.salt, snapshot.now, e, m)).collect())
    }
}

struct Running {
    job: u64,
    layer: usize,
    remaining: Q,
    bandwidth: Q,
}

/// Steps the MAS one cycle at a time. During cycle `[t, t+1)` every running
/// sub-job gains `min(1, B / sum b)` cycles of progress; it finishes at the
/// end of the first cycle where its progress reaches its latency. The
/// scheduler runs at every multiple of `period` on the pending sub-jobs
/// sorted by (deadline, job, layer).
pub fn cycle_oracle(
    bandwidth: &Q,
    table: &CostTable,
    jobs: &[Job],
    period: Cycles,
    salt: u64,
) -> BTreeMap<(u64, usize), Fate> {
    let m = table.num_sas();
    let mut fate: BTreeMap<(u64, usize), Fate> = BTreeMap::new();
    let mut admitted: Vec<&Job> = Vec::new();
    let mut running: Vec<Option<Running>> = (0..m).map(|_| None).collect();
    let mut queues: Vec<Vec<(f64, usize, u64, usize)>> = vec![Vec::new(); m];
    let mut started: HashSet<(u64, usize)> = HashSet::new();
    let total_subjobs: usize = jobs.iter().map(|j| table.num_layers(j.model_id()).unwrap()).sum();
    let mut t: Cycles = 0;
    loop {
        if fate.len() == total_subjobs {
            break;
        }
        let pending = |job: &Job, layer: usize, fate: &BTreeMap<(u64, usize), Fate>, started: &HashSet<(u64, usize)>| {
            !fate.contains_key(&(job.job_id(), layer)) && !started.contains(&(job.job_id(), layer))
        };
        if t % period == 0 {
            for j in jobs {
                if j.arrival() <= t && !admitted.iter().any(|a| a.job_id() == j.job_id()) {
                    admitted.push(j);
                }
            }
            // drops before the scheduler sees the queue
            drop_expired(&admitted, t, table, &mut fate, &started);
            let mut rq: Vec<ReadyEntry> = Vec::new();
            for j in &admitted {
                for layer in 0..table.num_layers(j.model_id()).unwrap() {
                    if pending(j, layer, &fate, &started) {
                        rq.push(ReadyEntry {
                            job_id: j.job_id(),
                            model_id: j.model_id(),
                            layer,
                            arrival: j.arrival(),
                            qos_latency: j.qos_latency(),
                        });
                    }
                }
            }
            rq.sort_by_key(|e| (e.arrival + e.qos_latency, e.job_id, e.layer));
            for queue in &mut queues {
                queue.clear();
            }
            for (i, e) in rq.iter().enumerate() {
                let d = hash_decision(salt, t, e, m);
                queues[d.sa].push((d.priority, i, e.job_id, e.layer));
            }
            for queue in &mut queues {
                queue.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            }
        }
        drop_expired(&admitted, t, table, &mut fate, &started);
        // dispatch
        for sa in 0..m {
            if running[sa].is_some() {
                continue;
            }
            let pick = queues[sa].iter().position(|&(_, _, job, layer)| {
                let j = admitted.iter().find(|j| j.job_id() == job).unwrap();
                pending(j, layer, &fate, &started)
                    && (layer == 0 || matches!(fate.get(&(job, layer - 1)), Some(Fate::Finished(_))))
            });
            if let Some(p) = pick {
                let (_, _, job, layer) = queues[sa].remove(p);
                let model = admitted.iter().find(|j| j.job_id() == job).unwrap().model_id();
                let c = table.get(model, layer, sa);
                started.insert((job, layer));
                running[sa] = Some(Running {
                    job,
                    layer,
                    remaining: q(c.cycles),
                    bandwidth: Q::new(c.bytes.into(), c.cycles.into()),
                });
            }
        }
        // one cycle of progress
        let demand: Q = running.iter().flatten().fold(Q::zero(), |acc, r| acc + &r.bandwidth);
        let rate = if demand <= *bandwidth || demand.is_zero() { Q::one() } else { bandwidth / &demand };
        for slot in running.iter_mut() {
            if let Some(r) = slot {
                r.remaining -= &rate;
                if !r.remaining.is_positive() {
                    fate.insert((r.job, r.layer), Fate::Finished(t + 1));
                    *slot = None;
                }
            }
        }
        t += 1;
        assert!(t < 1_000_000, "oracle did not terminate");
    }
    fate
}

fn drop_expired(
    admitted: &[&Job],
    t: Cycles,
    table: &CostTable,
    fate: &mut BTreeMap<(u64, usize), Fate>,
    started: &HashSet<(u64, usize)>,
) {
    for j in admitted {
        if j.arrival() + j.qos_latency() > t {
            continue;
        }
        for layer in 0..table.num_layers(j.model_id()).unwrap() {
            let key = (j.job_id(), layer);
            if !fate.contains_key(&key) && !started.contains(&key) {
                fate.insert(key, Fate::Dropped);
            }
        }
    }
}

/// Random MAS with `num_sas` identical SAs and a rational bandwidth.
pub fn small_mas(num_sas: usize, bandwidth: Q) -> MasConfig {
    let sas = (0..num_sas)
        .map(|i| SaSpec::new(i, format!("sa{i}"), Dataflow::WeightStationary, 4, 4, 4096, 64).unwrap())
        .collect();
    MasConfig::new(sas, bandwidth, 1.3, Default::default()).unwrap()
}

pub struct Instance {
    pub cfg: MasConfig,
    pub table: CostTable,
    pub jobs: Vec<Job>,
    pub period: Cycles,
    pub salt: u64,
}

/// M ≤ 3 SAs, at most 12 sub-jobs, latencies ≤ 30 cycles, rational B.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=3usize);
    let num_models = rng.random_range(1..=3usize);
    let mut costs = Vec::new();
    for _ in 0..num_models {
        let layers = rng.random_range(1..=4usize);
        costs.push(
            (0..layers)
                .map(|_| {
                    (0..m)
                        .map(|_| LayerCost {
                            cycles: rng.random_range(1..=30),
                            bytes: rng.random_range(0..=400),
                            energy_pj: 1.0,
                        })
                        .collect()
                })
                .collect::<Vec<_>>(),
        );
    }
    let names = (0..num_models).map(|i| format!("m{i}")).collect();
    let table = CostTable::from_entries(names, costs).unwrap();
    let bandwidth = Q::new(rng.random_range(3..=40u64).into(), rng.random_range(1..=3u64).into());
    let mut jobs = Vec::new();
    let mut sub_jobs = 0;
    let mut arrival = 0;
    for id in 0.. {
        let model = rng.random_range(0..num_models);
        let layers = table.num_layers(model).unwrap();
        if sub_jobs + layers > 12 {
            break;
        }
        sub_jobs += layers;
        arrival += rng.random_range(0..25);
        let qos = rng.random_range(5..=150);
        jobs.push(Job::new(id, model, arrival, qos, QosLevel::Medium).unwrap());
        if rng.random_bool(0.15) {
            break;
        }
    }
    Instance {
        cfg: small_mas(m, bandwidth),
        table,
        jobs,
        period: rng.random_range(1..=40),
        salt: rng.random(),
    }
}

/// Outcome of every sub-job from an engine event log.
pub fn fates_from_log(log: &[relmas_core::sim::EventRecord]) -> BTreeMap<(u64, usize), Fate> {
    let mut out = BTreeMap::new();
    for rec in log {
        match rec.event.as_str() {
            "finish" => {
                out.insert((rec.job.unwrap(), rec.layer.unwrap()), Fate::Finished(rec.t));
            }
            "drop" => {
                out.insert((rec.job.unwrap(), rec.layer.unwrap()), Fate::Dropped);
            }
            _ => {}
        }
    }
    out
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Every schedule the engine can distinguish: an SA per entry and a total
/// priority order (only its restriction to each SA queue matters). Calls
/// `score` once per distinct (assignment, per-SA order) pair.
pub fn enumerate_schedules(n: usize, num_sas: usize, mut score: impl FnMut(&[Decision]) -> f64) -> (f64, usize) {
    let perms = permutations(n);
    let mut seen = HashSet::new();
    let mut best = f64::NEG_INFINITY;
    let total = num_sas.pow(n as u32);
    for code in 0..total {
        let mut sas = vec![0; n];
        let mut c = code;
        for s in sas.iter_mut() {
            *s = c % num_sas;
            c /= num_sas;
        }
        for perm in &perms {
            // perm[rank] = entry index
            let per_sa: Vec<Vec<usize>> =
                (0..num_sas).map(|m| perm.iter().copied().filter(|&i| sas[i] == m).collect()).collect();
            if !seen.insert((sas.clone(), per_sa)) {
                continue;
            }
            let mut decisions = vec![Decision { priority: 0.0, sa: 0 }; n];
            for (rank, &i) in perm.iter().enumerate() {
                decisions[i] = Decision { priority: 1.0 - rank as f64 / n as f64, sa: sas[i] };
            }
            best = best.max(score(&decisions));
        }
    }
    (best, seen.len())
}

/// Parameter blocks of the LSTM in the documented flat layout.
pub struct ScalarLstm<'a> {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub tanh_head: bool,
    pub p: &'a [f64],
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl ScalarLstm<'_> {
    fn wx(&self, row: usize, col: usize) -> f64 {
        self.p[row * self.input + col]
    }

    fn wh(&self, row: usize, col: usize) -> f64 {
        self.p[4 * self.hidden * self.input + row * self.hidden + col]
    }

    fn b(&self, row: usize) -> f64 {
        self.p[4 * self.hidden * (self.input + self.hidden) + row]
    }

    fn fc_base(&self) -> usize {
        4 * self.hidden * (self.input + self.hidden + 1)
    }

    fn w1(&self, row: usize, col: usize) -> f64 {
        self.p[self.fc_base() + row * self.hidden + col]
    }

    fn b1(&self, row: usize) -> f64 {
        let half = self.hidden / 2;
        self.p[self.fc_base() + half * self.hidden + row]
    }

    fn w2(&self, row: usize, col: usize) -> f64 {
        let half = self.hidden / 2;
        self.p[self.fc_base() + half * (self.hidden + 1) + row * half + col]
    }

    fn b2(&self, row: usize) -> f64 {
        let half = self.hidden / 2;
        self.p[self.fc_base() + half * (self.hidden + 1) + self.output * half + row]
    }

    /// Gate `g` (0 = input, 1 = forget, 2 = candidate, 3 = output) of unit `k`.
    fn gate_pre(&self, g: usize, k: usize, x: &[f64], h: &[f64]) -> f64 {
        let row = g * self.hidden + k;
        let mut acc = self.b(row);
        for (j, xj) in x.iter().enumerate() {
            acc += self.wx(row, j) * xj;
        }
        for (j, hj) in h.iter().enumerate() {
            acc += self.wh(row, j) * hj;
        }
        acc
    }

    pub fn forward(&self, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let hsz = self.hidden;
        let half = hsz / 2;
        let mut h = vec![0.0; hsz];
        let mut c = vec![0.0; hsz];
        let mut outs = Vec::new();
        for x in seq {
            let mut h_new = vec![0.0; hsz];
            let mut c_new = vec![0.0; hsz];
            for k in 0..hsz {
                let i = sigmoid(self.gate_pre(0, k, x, &h));
                let f = sigmoid(self.gate_pre(1, k, x, &h));
                let g = self.gate_pre(2, k, x, &h).tanh();
                let o = sigmoid(self.gate_pre(3, k, x, &h));
                c_new[k] = f * c[k] + i * g;
                h_new[k] = o * c_new[k].tanh();
            }
            h = h_new;
            c = c_new;
            let mut a1 = vec![0.0; half];
            for (r, a) in a1.iter_mut().enumerate() {
                let mut z = self.b1(r);
                for (k, hk) in h.iter().enumerate() {
                    z += self.w1(r, k) * hk;
                }
                *a = if z > 0.0 { z } else { 0.0 };
            }
            let mut y = vec![0.0; self.output];
            for (r, yr) in y.iter_mut().enumerate() {
                let mut z = self.b2(r);
                for (k, ak) in a1.iter().enumerate() {
                    z += self.w2(r, k) * ak;
                }
                *yr = if self.tanh_head { z.tanh() } else { z };
            }
            outs.push(y);
        }
        outs
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap()
}
