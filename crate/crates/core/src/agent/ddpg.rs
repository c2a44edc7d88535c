//! Off-policy actor-critic training. One step is one scheduling period:
//! act with noise, commit the period, score the decision batch on a
//! projection, store the transition, then update from a replay sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostTable;
use crate::model::{Cycles, MasConfig};
use crate::sim::{run_trace, Engine, MetricsCollector, RunOptions, SimEvent};
use crate::workload::{generate_trace, RequestTrace, TraceParams};

use super::checkpoint::{actor_shape, critic_shape, Checkpoint, ACTOR, ACTOR_TARGET, CRITIC, CRITIC_TARGET};
use super::codec::{action_width, decode_action, encode_state, state_width, ActionEncoding, FeatureNorms, StateEncoding};
use super::lstm::{ForwardCache, LstmNet};
use super::optim::{clip_global_norm, Adam, AdamParams};
use super::policy::{act, Policy, RelmasScheduler};
use super::replay::ReplayBuffer;
use super::reward::{compute_reward, RewardCoefficients};
use super::AgentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub hidden: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount_factor: f64,
    pub soft_update_tau: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub warmup_steps: usize,
    pub noise_sigma: f64,
    /// Multiplied into sigma after every step.
    pub noise_decay: f64,
    pub noise_min: f64,
    pub episodes: u64,
    pub seed: u64,
    /// Global L2 norm cap on each gradient; 0 disables clipping.
    pub grad_clip: f64,
    /// Evaluate on the held-out traces every this many episodes.
    pub eval_interval: u64,
    /// Upper clip of normalised time features.
    pub feature_cap: f64,
    /// Return the actor with the best evaluation score instead of the last.
    pub keep_best: bool,
    pub reward: RewardCoefficients,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            hidden: 64,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            discount_factor: 0.99,
            soft_update_tau: 0.005,
            buffer_capacity: 100_000,
            batch_size: 32,
            warmup_steps: 1000,
            noise_sigma: 0.2,
            noise_decay: 0.999,
            noise_min: 0.0,
            episodes: 100,
            seed: 0,
            grad_clip: 5.0,
            eval_interval: 1,
            feature_cap: 10.0,
            keep_best: false,
            reward: RewardCoefficients::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if self.hidden == 0 || self.hidden % 2 != 0 {
            return bad("hidden size must be even and positive");
        }
        if !(self.soft_update_tau > 0.0 && self.soft_update_tau <= 1.0) {
            return bad("soft_update_tau must lie in (0, 1]");
        }
        if !(self.discount_factor >= 0.0 && self.discount_factor < 1.0) {
            return bad("discount_factor must lie in [0, 1)");
        }
        if !(self.actor_lr > 0.0 && self.actor_lr.is_finite() && self.critic_lr > 0.0 && self.critic_lr.is_finite()) {
            return bad("learning rates must be positive");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("batch size and buffer capacity must be positive");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_min >= 0.0 && self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return bad("noise parameters out of range");
        }
        if !(self.feature_cap > 0.0 && self.feature_cap.is_finite()) || !(self.grad_clip >= 0.0) {
            return bad("feature cap must be positive and grad clip non-negative");
        }
        self.reward.validate().map_err(AgentError::Config)
    }
}

/// Environment of a training run. Episode `k` uses `trace_params` with a
/// seed derived from the trainer seed and `k`.
#[derive(Debug, Clone)]
pub struct TrainingSetup<'a> {
    pub cfg: &'a MasConfig,
    pub table: &'a CostTable,
    pub period: Cycles,
    pub trace_params: TraceParams,
    pub eval_traces: Vec<RequestTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: StateEncoding,
    pub action: ActionEncoding,
    pub reward: f64,
    /// Residual ready queue after the period, before new arrivals.
    pub next_state: StateEncoding,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u64,
    pub mean_reward: f64,
    pub eval_sla_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub steps: u64,
    pub total_reward: f64,
    pub sla_rate: f64,
    pub updates: u64,
}

pub struct TrainOutcome {
    pub policy: Policy,
    pub curve: Vec<CurvePoint>,
    pub checkpoint: Checkpoint,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Trace seed of training episode `episode`.
pub fn episode_seed(seed: u64, episode: u64) -> u64 {
    splitmix(seed ^ splitmix(episode))
}

/// Per-step critic inputs `[s_t ++ a_t]`; the primer gets a zero action.
pub fn critic_input(state: &[Vec<f64>], actions: &[Vec<f64>], action_width: usize) -> Vec<Vec<f64>> {
    state
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut v = Vec::with_capacity(s.len() + action_width);
            v.extend_from_slice(s);
            match i.checked_sub(1).and_then(|j| actions.get(j)) {
                Some(a) => v.extend_from_slice(a),
                None => v.resize(s.len() + action_width, 0.0),
            }
            v
        })
        .collect()
}

/// Q of a state-action pair: the critic output at the final timestep.
pub fn critic_q(critic: &LstmNet, state: &[Vec<f64>], actions: &[Vec<f64>]) -> Result<(f64, ForwardCache), AgentError> {
    let g = critic.shape().input.saturating_sub(state.first().map_or(0, Vec::len));
    let cache = critic.forward(&critic_input(state, actions, g))?;
    let q = cache.outputs().last().map_or(0.0, |y| y[0]);
    Ok((q, cache))
}

/// Mean SLA satisfaction rate of the deterministic policy over `traces`.
pub fn evaluate_policy(
    policy: &Policy,
    cfg: &MasConfig,
    table: &CostTable,
    period: Cycles,
    traces: &[RequestTrace],
) -> Result<f64, AgentError> {
    if traces.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for trace in traces {
        let mut sched = RelmasScheduler::new(policy.clone());
        total += run_trace(cfg, table, trace, &mut sched, period, &RunOptions::default())?.metrics.sla_satisfaction_rate;
    }
    Ok(total / traces.len() as f64)
}

pub struct Trainer {
    cfg: TrainerConfig,
    num_sas: usize,
    norms: FeatureNorms,
    actor: LstmNet,
    critic: LstmNet,
    actor_target: LstmNet,
    critic_target: LstmNet,
    actor_opt: Adam,
    critic_opt: Adam,
    buffer: ReplayBuffer<Experience>,
    rng: ChaCha8Rng,
    sigma: f64,
    steps: u64,
    episodes_done: u64,
    best: Option<(f64, LstmNet)>,
    curve: Vec<CurvePoint>,
}

impl Trainer {
    pub fn new(cfg: TrainerConfig, setup: &TrainingSetup<'_>) -> Result<Self, AgentError> {
        cfg.validate()?;
        let num_sas = setup.cfg.num_sas();
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let actor = LstmNet::init(actor_shape(cfg.hidden, num_sas)?, &mut init_rng);
        let critic = LstmNet::init(critic_shape(cfg.hidden, num_sas)?, &mut init_rng);
        let norms = FeatureNorms::new(setup.period, cfg.feature_cap, setup.table);
        Ok(Self::assemble(cfg, num_sas, norms, actor.clone(), critic.clone(), actor, critic, 0))
    }

    /// Continues from a checkpoint. Optimiser moments and the replay buffer
    /// start empty; missing target networks are copied from the online ones.
    pub fn resume(cfg: TrainerConfig, setup: &TrainingSetup<'_>, ckpt: &Checkpoint) -> Result<Self, AgentError> {
        cfg.validate()?;
        if ckpt.num_sas != setup.cfg.num_sas() || ckpt.hidden != cfg.hidden {
            return Err(AgentError::Shape(format!(
                "checkpoint has h={} M={}, run needs h={} M={}",
                ckpt.hidden,
                ckpt.num_sas,
                cfg.hidden,
                setup.cfg.num_sas()
            )));
        }
        let actor = ckpt.actor_net(ACTOR)?;
        let critic = ckpt.critic_net(CRITIC)?;
        let actor_target = ckpt.actor_net(ACTOR_TARGET).unwrap_or_else(|_| actor.clone());
        let critic_target = ckpt.critic_net(CRITIC_TARGET).unwrap_or_else(|_| critic.clone());
        Ok(Self::assemble(cfg, ckpt.num_sas, ckpt.norms, actor, critic, actor_target, critic_target, ckpt.episodes_done))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        cfg: TrainerConfig,
        num_sas: usize,
        norms: FeatureNorms,
        actor: LstmNet,
        critic: LstmNet,
        actor_target: LstmNet,
        critic_target: LstmNet,
        episodes_done: u64,
    ) -> Self {
        let sigma = cfg.noise_sigma;
        Trainer {
            actor_opt: Adam::new(AdamParams::with_lr(cfg.actor_lr), actor.params().len()),
            critic_opt: Adam::new(AdamParams::with_lr(cfg.critic_lr), critic.params().len()),
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            rng: ChaCha8Rng::seed_from_u64(splitmix(cfg.seed.wrapping_add(episodes_done))),
            num_sas,
            norms,
            actor,
            critic,
            actor_target,
            critic_target,
            sigma,
            steps: 0,
            episodes_done,
            best: None,
            curve: Vec::new(),
            cfg,
        }
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    pub fn episodes_done(&self) -> u64 {
        self.episodes_done
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn curve(&self) -> &[CurvePoint] {
        &self.curve
    }

    pub fn buffer(&self) -> &ReplayBuffer<Experience> {
        &self.buffer
    }

    pub fn actor(&self) -> &LstmNet {
        &self.actor
    }

    pub fn critic(&self) -> &LstmNet {
        &self.critic
    }

    pub fn actor_target(&self) -> &LstmNet {
        &self.actor_target
    }

    pub fn critic_target(&self) -> &LstmNet {
        &self.critic_target
    }

    /// The deployable policy: the best evaluated actor under `keep_best`,
    /// the current one otherwise.
    pub fn policy(&self) -> Policy {
        let actor = match (&self.best, self.cfg.keep_best) {
            (Some((_, best)), true) => best.clone(),
            _ => self.actor.clone(),
        };
        Policy { actor, norms: self.norms }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            hidden: self.cfg.hidden,
            num_sas: self.num_sas,
            episodes_done: self.episodes_done,
            norms: self.norms,
            arrays: vec![
                (ACTOR.into(), self.actor.params().to_vec()),
                (CRITIC.into(), self.critic.params().to_vec()),
                (ACTOR_TARGET.into(), self.actor_target.params().to_vec()),
                (CRITIC_TARGET.into(), self.critic_target.params().to_vec()),
            ],
        }
    }

    pub fn push_experience(&mut self, e: Experience) {
        self.buffer.push(e);
    }

    fn diverged(&self, what: &str) -> AgentError {
        AgentError::Diverged { episode: self.episodes_done, step: self.steps, what: what.to_string() }
    }

    /// One critic and one actor step on a replay sample, then soft target
    /// updates. Returns the critic loss, or `None` before warmup.
    pub fn update(&mut self) -> Result<Option<f64>, AgentError> {
        if self.buffer.len() < self.cfg.warmup_steps.max(1) {
            return Ok(None);
        }
        let bs = self.cfg.batch_size;
        let inv = 1.0 / bs as f64;
        let g = action_width(self.num_sas);
        let f = state_width(self.num_sas);
        let batch = self.buffer.sample(bs, &mut self.rng);

        let mut critic_grads = vec![0.0; self.critic.params().len()];
        let mut loss = 0.0;
        for e in &batch {
            let y = if e.terminal {
                e.reward
            } else {
                let next_actions = act(&self.actor_target, &e.next_state, None)?;
                let (q_next, _) = critic_q(&self.critic_target, &e.next_state.steps, &next_actions.steps)?;
                e.reward + self.cfg.discount_factor * q_next
            };
            let (q, cache) = critic_q(&self.critic, &e.state.steps, &e.action.steps)?;
            let err = q - y;
            loss += err * err * inv;
            let mut out_grads = vec![vec![0.0]; cache.len()];
            if let Some(last) = out_grads.last_mut() {
                last[0] = 2.0 * err * inv;
            }
            self.critic.backward_into(&cache, &out_grads, &mut critic_grads);
        }
        if !loss.is_finite() {
            return Err(self.diverged("non-finite critic loss"));
        }
        clip_global_norm(&mut critic_grads, self.cfg.grad_clip);
        self.critic_opt.step(self.critic.params_mut(), &critic_grads);

        let mut actor_grads = vec![0.0; self.actor.params().len()];
        let mut scratch = vec![0.0; self.critic.params().len()];
        for e in &batch {
            if e.state.is_empty() {
                continue;
            }
            let acache = self.actor.forward(&e.state.steps)?;
            let actions: Vec<Vec<f64>> = acache.outputs().into_iter().skip(1).collect();
            let (_, ccache) = critic_q(&self.critic, &e.state.steps, &actions)?;
            let mut out_grads = vec![vec![0.0]; ccache.len()];
            if let Some(last) = out_grads.last_mut() {
                last[0] = -inv;
            }
            scratch.iter_mut().for_each(|v| *v = 0.0);
            let dx = self.critic.backward_into(&ccache, &out_grads, &mut scratch);
            let mut actor_out = vec![vec![0.0; g]; acache.len()];
            for (t, d) in dx.iter().enumerate().skip(1) {
                actor_out[t].copy_from_slice(&d[f..f + g]);
            }
            self.actor.backward_into(&acache, &actor_out, &mut actor_grads);
        }
        clip_global_norm(&mut actor_grads, self.cfg.grad_clip);
        self.actor_opt.step(self.actor.params_mut(), &actor_grads);

        if !self.actor.is_finite() || !self.critic.is_finite() {
            return Err(self.diverged("non-finite parameters"));
        }
        let tau = self.cfg.soft_update_tau;
        self.actor_target.soft_update_from(&self.actor, tau);
        self.critic_target.soft_update_from(&self.critic, tau);
        Ok(Some(loss))
    }

    /// Plays one training episode with exploration noise, updating after
    /// every step.
    pub fn run_episode(&mut self, setup: &TrainingSetup<'_>) -> Result<EpisodeStats, AgentError> {
        let mut params = setup.trace_params.clone();
        params.seed = episode_seed(self.cfg.seed, self.episodes_done);
        let trace = generate_trace(&params, setup.table)?;
        let (cfg, table, period) = (setup.cfg, setup.table, setup.period);
        let mut engine = Engine::new(cfg, table);
        let mut collector = MetricsCollector::new(cfg.num_sas());
        let mut obs = |ev: &SimEvent| collector.observe(ev);
        let mut jobs = trace.jobs;
        jobs.sort_by_key(|j| (j.arrival(), j.job_id()));
        let mut next = 0;
        let mut stats = EpisodeStats { steps: 0, total_reward: 0.0, sla_rate: 1.0, updates: 0 };
        loop {
            while next < jobs.len() && jobs[next].arrival() <= engine.now() {
                engine.admit(jobs[next].clone(), &mut obs)?;
                next += 1;
            }
            if engine.is_drained() {
                let Some(job) = jobs.get(next) else { break };
                engine.idle_until(job.arrival().div_ceil(period).saturating_mul(period));
                continue;
            }
            let snapshot = engine.snapshot();
            if snapshot.ready_queue.is_empty() {
                engine.advance_period(&[], period, &mut obs)?;
                continue;
            }
            let state = encode_state(&snapshot, table, cfg, &self.norms)?;
            let action = act(&self.actor, &state, Some((self.sigma, &mut self.rng)))?;
            let decisions = decode_action(&action);
            let projection = engine.project(&decisions)?;
            let reward =
                compute_reward(&self.cfg.reward, snapshot.now, period, &projection.ready_queue, &projection.outcomes);
            engine.advance_period(&decisions, period, &mut obs)?;
            let next_state = encode_state(&engine.snapshot(), table, cfg, &self.norms)?;
            let terminal = next_state.is_empty() && next == jobs.len();
            self.buffer.push(Experience { state, action, reward, next_state, terminal });
            self.steps += 1;
            stats.steps += 1;
            stats.total_reward += reward;
            self.sigma = (self.sigma * self.cfg.noise_decay).max(self.cfg.noise_min);
            if self.update()?.is_some() {
                stats.updates += 1;
            }
        }
        stats.sla_rate = collector.finish().sla_satisfaction_rate;
        Ok(stats)
    }

    pub fn evaluate(&self, setup: &TrainingSetup<'_>) -> Result<f64, AgentError> {
        let policy = Policy { actor: self.actor.clone(), norms: self.norms };
        evaluate_policy(&policy, setup.cfg, setup.table, setup.period, &setup.eval_traces)
    }

    /// Runs `episodes` more episodes, calling `on_episode` after each.
    pub fn train<F>(&mut self, setup: &TrainingSetup<'_>, episodes: u64, mut on_episode: F) -> Result<(), AgentError>
    where
        F: FnMut(&Trainer, &CurvePoint) -> Result<(), AgentError>,
    {
        for _ in 0..episodes {
            let stats = self.run_episode(setup)?;
            self.episodes_done += 1;
            let interval = self.cfg.eval_interval.max(1);
            let eval = if !setup.eval_traces.is_empty() && self.episodes_done % interval == 0 {
                let score = self.evaluate(setup)?;
                if self.best.as_ref().is_none_or(|(b, _)| score > *b) {
                    self.best = Some((score, self.actor.clone()));
                }
                Some(score)
            } else {
                None
            };
            let point = CurvePoint {
                episode: self.episodes_done,
                mean_reward: if stats.steps == 0 { 0.0 } else { stats.total_reward / stats.steps as f64 },
                eval_sla_rate: eval,
            };
            self.curve.push(point.clone());
            on_episode(self, &point)?;
        }
        Ok(())
    }
}

/// Trains from scratch for `cfg.episodes` episodes.
pub fn ddpg_train(cfg: TrainerConfig, setup: &TrainingSetup<'_>) -> Result<TrainOutcome, AgentError> {
    let episodes = cfg.episodes;
    let mut trainer = Trainer::new(cfg, setup)?;
    trainer.train(setup, episodes, |_, _| Ok(()))?;
    Ok(TrainOutcome { policy: trainer.policy(), curve: trainer.curve.clone(), checkpoint: trainer.checkpoint() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::LayerCost;
    use crate::model::{QosLevel, SaSpec, Dataflow};
    use crate::workload::{QosMix, WorkloadSet, WorkloadKind};

    fn tiny_env() -> (MasConfig, CostTable) {
        let sa = |id: usize, df| SaSpec::new(id, format!("sa{id}"), df, 16, 1, 1 << 16, 512).unwrap();
        let cfg = MasConfig::new(
            vec![sa(0, Dataflow::RowStationary), sa(1, Dataflow::WeightStationary)],
            crate::rational::from_u64(16),
            1.3,
            Default::default(),
        )
        .unwrap();
        let c = |cycles, bytes| LayerCost { cycles, bytes, energy_pj: 1.0 };
        let table = CostTable::from_entries(
            vec!["a".into(), "b".into()],
            vec![
                vec![vec![c(40, 400), c(60, 300)], vec![c(30, 100), c(20, 200)]],
                vec![vec![c(80, 800), c(50, 100)]],
            ],
        )
        .unwrap();
        (cfg, table)
    }

    fn setup<'a>(cfg: &'a MasConfig, table: &'a CostTable) -> TrainingSetup<'a> {
        TrainingSetup {
            cfg,
            table,
            period: 50,
            trace_params: TraceParams {
                workload: WorkloadSet::resolve(WorkloadKind::All, table).unwrap(),
                duration_cycles: 600,
                pareto_shape: 2.0,
                pareto_scale_cycles: 20.0,
                qos_medium_factor: 3.0,
                qos_mix: QosMix::only(QosLevel::Medium),
                seed: 0,
            },
            eval_traces: vec![],
        }
    }

    fn small_cfg() -> TrainerConfig {
        TrainerConfig { hidden: 4, batch_size: 4, warmup_steps: 4, episodes: 2, seed: 5, ..Default::default() }
    }

    #[test]
    fn config_validation() {
        assert!(TrainerConfig::default().validate().is_ok());
        assert!(TrainerConfig { soft_update_tau: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig { discount_factor: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig { hidden: 3, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn critic_primer_gets_zero_action() {
        let s = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let a = vec![vec![0.5, -0.5, 0.1]];
        let x = critic_input(&s, &a, 3);
        assert_eq!(x[0], vec![1.0, 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(x[1], vec![3.0, 4.0, 0.5, -0.5, 0.1]);
    }

    #[test]
    fn no_updates_during_warmup() {
        let (cfg, table) = tiny_env();
        let env = setup(&cfg, &table);
        let tc = TrainerConfig { warmup_steps: 1_000_000, ..small_cfg() };
        let mut t = Trainer::new(tc, &env).unwrap();
        let before = (t.actor().clone(), t.critic().clone());
        let stats = t.run_episode(&env).unwrap();
        assert!(stats.steps > 0);
        assert_eq!(stats.updates, 0);
        assert_eq!((t.actor().clone(), t.critic().clone()), before);
    }

    #[test]
    fn tau_one_copies_online_into_target() {
        let (cfg, table) = tiny_env();
        let env = setup(&cfg, &table);
        let mut t = Trainer::new(TrainerConfig { soft_update_tau: 1.0, ..small_cfg() }, &env).unwrap();
        t.run_episode(&env).unwrap();
        assert!(t.update().unwrap().is_some());
        assert_eq!(t.actor_target().params(), t.actor().params());
        assert_eq!(t.critic_target().params(), t.critic().params());
    }

    #[test]
    fn next_state_is_residual_subset() {
        let (cfg, table) = tiny_env();
        let env = setup(&cfg, &table);
        let mut t = Trainer::new(TrainerConfig { warmup_steps: 1_000_000, ..small_cfg() }, &env).unwrap();
        t.run_episode(&env).unwrap();
        assert!(t.buffer().len() > 1);
        for e in t.buffer().iter() {
            for sj in &e.next_state.entries {
                assert!(e.state.entries.contains(sj));
            }
            assert_eq!(e.action.steps.len(), e.state.len());
        }
        assert!(t.buffer().iter().last().unwrap().terminal);
    }

    #[test]
    fn training_is_reproducible_and_resumable() {
        let (cfg, table) = tiny_env();
        let env = setup(&cfg, &table);
        let a = ddpg_train(small_cfg(), &env).unwrap();
        let b = ddpg_train(small_cfg(), &env).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.checkpoint, b.checkpoint);
        assert_eq!(a.checkpoint.episodes_done, 2);
        let mut resumed = Trainer::resume(small_cfg(), &env, &a.checkpoint).unwrap();
        resumed.train(&env, 1, |_, _| Ok(())).unwrap();
        assert_eq!(resumed.curve()[0].episode, 3);
    }
}
