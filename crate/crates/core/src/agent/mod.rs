//! The learned scheduler: state/action codecs, LSTM actor and critic,
//! replay buffer, reward and the DDPG training loop.

pub mod checkpoint;
pub mod codec;
pub mod ddpg;
pub mod lstm;
pub mod optim;
pub mod overhead;
pub mod policy;
pub mod replay;
pub mod reward;

use thiserror::Error;

use crate::sim::{RunError, SimError};

pub use checkpoint::{Checkpoint, CheckpointError};
pub use codec::{decode_action, encode_state, ActionEncoding, FeatureNorms, StateEncoding};
pub use ddpg::{ddpg_train, CurvePoint, Experience, TrainOutcome, Trainer, TrainerConfig, TrainingSetup};
pub use lstm::{Head, LstmNet, NetShape};
pub use overhead::{overhead_energy, policy_mac_count, OverheadConstants, OverheadReport};
pub use policy::{relmas_schedule, Policy, RelmasScheduler};
pub use replay::ReplayBuffer;
pub use reward::{compute_reward, sla_score, RewardCoefficients};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no cost entry for model {model} layer {layer} on SA {sa}")]
    MissingCost { model: usize, layer: usize, sa: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid trainer config: {0}")]
    Config(String),
    #[error("training diverged at episode {episode}, step {step}: {what}")]
    Diverged { episode: u64, step: u64, what: String },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Workload(#[from] crate::workload::WorkloadError),
}
