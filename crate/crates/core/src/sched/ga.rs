//! Genetic search over (priority, SA) assignments, scored by projecting
//! each candidate schedule on the engine.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::agent::reward::{sla_score, RewardCoefficients};
use crate::model::{Decision, SystemSnapshot};

use super::{SchedEnv, SchedError, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MagmaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub priority_sigma: f64,
    pub sa_mutation_rate: f64,
    pub seed: u64,
    pub reward: RewardCoefficients,
}

impl Default for MagmaConfig {
    fn default() -> Self {
        MagmaConfig {
            population: 100,
            generations: 100,
            tournament: 3,
            priority_sigma: 0.2,
            sa_mutation_rate: 0.05,
            seed: 0,
            reward: RewardCoefficients::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub priorities: Vec<f64>,
    pub sas: Vec<usize>,
}

impl Chromosome {
    fn random(n: usize, num_sas: usize, rng: &mut ChaCha8Rng) -> Self {
        Chromosome {
            priorities: (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            sas: (0..n).map(|_| rng.random_range(0..num_sas)).collect(),
        }
    }

    pub fn decode(&self) -> Vec<Decision> {
        self.priorities.iter().zip(&self.sas).map(|(&priority, &sa)| Decision { priority, sa }).collect()
    }

    /// Everything the engine can observe: SA choice plus the relative
    /// order of priorities.
    fn schedule_key(&self) -> (Vec<usize>, Vec<u32>) {
        let mut order: Vec<usize> = (0..self.priorities.len()).collect();
        order.sort_by(|&a, &b| self.priorities[b].total_cmp(&self.priorities[a]).then(a.cmp(&b)));
        let mut rank = vec![0u32; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r as u32;
        }
        (self.sas.clone(), rank)
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Chromosome,
    pub best_fitness: f64,
    /// Best fitness after initialisation and after every generation.
    pub history: Vec<f64>,
}

struct Evaluator<'e, 'a> {
    env: &'e SchedEnv<'a>,
    reward: RewardCoefficients,
    cache: HashMap<(Vec<usize>, Vec<u32>), f64>,
}

impl Evaluator<'_, '_> {
    fn fitness(&mut self, c: &Chromosome) -> Result<f64, SchedError> {
        let key = c.schedule_key();
        if let Some(&f) = self.cache.get(&key) {
            return Ok(f);
        }
        let projection = self.env.engine.project(&c.decode())?;
        let f = sla_score(&self.reward, &projection.ready_queue, &projection.outcomes);
        self.cache.insert(key, f);
        Ok(f)
    }
}

fn tournament<'p>(pop: &'p [(Chromosome, f64)], k: usize, rng: &mut ChaCha8Rng) -> &'p Chromosome {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k.max(1) {
        let i = rng.random_range(0..pop.len());
        if pop[i].1 > pop[best].1 {
            best = i;
        }
    }
    &pop[best].0
}

fn mutate(c: &mut Chromosome, cfg: &MagmaConfig, num_sas: usize, rng: &mut ChaCha8Rng) {
    let jitter = Normal::new(0.0, cfg.priority_sigma.max(0.0)).expect("finite sigma");
    for p in &mut c.priorities {
        *p = (*p + jitter.sample(rng)).clamp(-1.0, 1.0);
    }
    for sa in &mut c.sas {
        if rng.random_bool(cfg.sa_mutation_rate.clamp(0.0, 1.0)) {
            *sa = rng.random_range(0..num_sas);
        }
    }
}

fn best_of(pop: &[(Chromosome, f64)]) -> usize {
    let mut best = 0;
    for (i, (_, f)) in pop.iter().enumerate() {
        if *f > pop[best].1 {
            best = i;
        }
    }
    best
}

/// Elitist GA: tournament selection, uniform crossover on both gene
/// vectors, Gaussian priority jitter and per-gene SA resampling. Fitness
/// is [`sla_score`] of the projected schedule.
pub fn magma_ga(
    snapshot: &SystemSnapshot,
    env: &SchedEnv<'_>,
    cfg: &MagmaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GaOutcome, SchedError> {
    let n = snapshot.ready_queue.len();
    let num_sas = env.cfg.num_sas();
    let pop_size = cfg.population.max(1);
    let mut eval = Evaluator { env, reward: cfg.reward, cache: HashMap::new() };

    let mut pop = Vec::with_capacity(pop_size);
    for _ in 0..pop_size {
        let c = Chromosome::random(n, num_sas, rng);
        let f = eval.fitness(&c)?;
        pop.push((c, f));
    }
    let mut history = vec![pop[best_of(&pop)].1];

    for _ in 0..cfg.generations {
        let elite = pop[best_of(&pop)].clone();
        let mut next = Vec::with_capacity(pop_size);
        if pop_size == 1 {
            let mut child = elite.0.clone();
            mutate(&mut child, cfg, num_sas, rng);
            let f = eval.fitness(&child)?;
            next.push(if f > elite.1 { (child, f) } else { elite });
        } else {
            next.push(elite);
            while next.len() < pop_size {
                let a = tournament(&pop, cfg.tournament, rng);
                let b = tournament(&pop, cfg.tournament, rng);
                let mut child = Chromosome {
                    priorities: (0..n)
                        .map(|i| if rng.random_bool(0.5) { a.priorities[i] } else { b.priorities[i] })
                        .collect(),
                    sas: (0..n).map(|i| if rng.random_bool(0.5) { a.sas[i] } else { b.sas[i] }).collect(),
                };
                mutate(&mut child, cfg, num_sas, rng);
                let f = eval.fitness(&child)?;
                next.push((child, f));
            }
        }
        pop = next;
        history.push(pop[best_of(&pop)].1);
    }
    let (best, best_fitness) = pop.swap_remove(best_of(&pop));
    Ok(GaOutcome { best, best_fitness, history })
}

#[derive(Debug, Clone)]
pub struct MagmaScheduler {
    pub cfg: MagmaConfig,
    rng: ChaCha8Rng,
}

impl MagmaScheduler {
    pub fn new(cfg: MagmaConfig) -> Self {
        MagmaScheduler { rng: ChaCha8Rng::seed_from_u64(cfg.seed), cfg }
    }
}

impl Scheduler for MagmaScheduler {
    fn name(&self) -> String {
        "magma".into()
    }

    fn schedule(&mut self, snapshot: &SystemSnapshot, env: &SchedEnv<'_>) -> Result<Vec<Decision>, SchedError> {
        if snapshot.ready_queue.is_empty() {
            return Ok(Vec::new());
        }
        Ok(magma_ga(snapshot, env, &self.cfg, &mut self.rng)?.best.decode())
    }
}
