//! Online scheduling of multi-tenant DNN inference on a heterogeneous
//! multi-accelerator system (MAS).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the shared domain types (sub-accelerators, jobs,
//!   sub-jobs, snapshots, decisions).
//! * [`cost`] produces per-(layer, sub-accelerator) latency, bandwidth and
//!   energy figures, analytically or from an ingested cost table.
//! * [`workload`] generates Pareto-arrival request traces.
//! * [`sim`] is the cycle-exact discrete-event engine with shared-bandwidth
//!   contention, deadline drops and schedule projection.
//! * [`sched`] defines the scheduler interface and the heuristic / genetic
//!   baselines.
//! * [`agent`] is the LSTM actor-critic policy and its DDPG trainer.

pub mod agent;
pub mod cost;
pub mod model;
pub mod rational;
pub mod sched;
pub mod sim;
pub mod workload;

pub use model::{Cycles, Decision, Job, MasConfig, QosLevel, SaSpec, SystemSnapshot};
