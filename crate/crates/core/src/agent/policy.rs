use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cost::CostTable;
use crate::model::{Decision, MasConfig, SystemSnapshot};
use crate::sched::{SchedEnv, SchedError, Scheduler};

use super::codec::{
    action_width, decode_action, encode_state, state_width, ActionEncoding, FeatureNorms, StateEncoding,
};
use super::lstm::{Head, LstmNet};
use super::AgentError;

/// A trained actor together with the feature scaling it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actor: LstmNet,
    pub norms: FeatureNorms,
}

impl Policy {
    pub fn new(actor: LstmNet, norms: FeatureNorms) -> Result<Self, AgentError> {
        let shape = actor.shape();
        if shape.head != Head::Tanh || shape.input < 6 || (shape.input - 4) % 2 != 0 {
            return Err(AgentError::Shape("actor must have a tanh head and 4+2M inputs".into()));
        }
        let m = (shape.input - 4) / 2;
        if shape.output != action_width(m) {
            return Err(AgentError::Shape(format!("actor output {} != {}", shape.output, action_width(m))));
        }
        Ok(Policy { actor, norms })
    }

    pub fn num_sas(&self) -> usize {
        (self.actor.shape().input - 4) / 2
    }
}

/// Encode, run the actor, optionally perturb every action element with
/// `N(0, sigma)` noise and clip to [-1, 1], then decode.
pub fn relmas_schedule(
    actor: &LstmNet,
    snapshot: &SystemSnapshot,
    table: &CostTable,
    cfg: &MasConfig,
    norms: &FeatureNorms,
    noise: Option<(f64, &mut ChaCha8Rng)>,
) -> Result<(Vec<Decision>, ActionEncoding), AgentError> {
    if actor.shape().input != state_width(cfg.num_sas()) {
        return Err(AgentError::Shape(format!(
            "actor expects {} features, MAS has {} SAs",
            actor.shape().input,
            cfg.num_sas()
        )));
    }
    let state = encode_state(snapshot, table, cfg, norms)?;
    let action = act(actor, &state, noise)?;
    Ok((decode_action(&action), action))
}

/// Actor outputs for every ready-queue entry (the primer's output is
/// discarded), with optional clipped Gaussian noise.
pub fn act(
    actor: &LstmNet,
    state: &StateEncoding,
    noise: Option<(f64, &mut ChaCha8Rng)>,
) -> Result<ActionEncoding, AgentError> {
    if state.is_empty() {
        return Ok(ActionEncoding { steps: Vec::new() });
    }
    let mut steps = actor.forward(&state.steps)?.outputs();
    steps.remove(0);
    if let Some((sigma, rng)) = noise {
        if sigma > 0.0 {
            let dist = Normal::new(0.0, sigma).map_err(|e| AgentError::Config(e.to_string()))?;
            for v in steps.iter_mut().flatten() {
                *v = (*v + dist.sample(rng)).clamp(-1.0, 1.0);
            }
        }
    }
    Ok(ActionEncoding { steps })
}

/// Inference-time scheduler wrapping a [`Policy`]; `sigma > 0` keeps
/// exploration noise on.
#[derive(Debug, Clone)]
pub struct RelmasScheduler {
    pub policy: Policy,
    pub sigma: f64,
    rng: ChaCha8Rng,
}

impl RelmasScheduler {
    pub fn new(policy: Policy) -> Self {
        RelmasScheduler { policy, sigma: 0.0, rng: ChaCha8Rng::seed_from_u64(0) }
    }

    pub fn with_noise(policy: Policy, sigma: f64, seed: u64) -> Self {
        RelmasScheduler { policy, sigma, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Scheduler for RelmasScheduler {
    fn name(&self) -> String {
        "relmas".into()
    }

    fn schedule(&mut self, snapshot: &SystemSnapshot, env: &SchedEnv<'_>) -> Result<Vec<Decision>, SchedError> {
        let noise = (self.sigma > 0.0).then_some((self.sigma, &mut self.rng));
        relmas_schedule(&self.policy.actor, snapshot, env.table, env.cfg, &self.policy.norms, noise)
            .map(|(d, _)| d)
            .map_err(|e| SchedError::Policy(e.to_string()))
    }
}
