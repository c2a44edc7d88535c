//! Energy cost of running the policy itself on one of the SAs.

use serde::{Deserialize, Serialize};

use super::codec::{action_width, state_width};

/// Multiplies per LSTM timestep: gates, FC1 and FC2. Biases and pointwise
/// gate products are not counted.
pub fn policy_mac_count(hidden: usize, num_sas: usize) -> u64 {
    let h = hidden as u64;
    let f = state_width(num_sas) as u64;
    let g = action_width(num_sas) as u64;
    4 * h * (f + h) + h * (h / 2) + (h / 2) * g
}

/// Actor parameters including biases.
pub fn policy_param_count(hidden: usize, num_sas: usize) -> u64 {
    let h = hidden as u64;
    let f = state_width(num_sas) as u64;
    let g = action_width(num_sas) as u64;
    4 * h * (f + h + 1) + (h / 2) * (h + 1) + g * (h / 2 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverheadConstants {
    /// Energy per MAC on the SA running the policy.
    pub mac_pj: f64,
    /// DRAM energy per byte for fetching weights.
    pub byte_pj: f64,
    pub bytes_per_weight: f64,
}

impl Default for OverheadConstants {
    fn default() -> Self {
        OverheadConstants { mac_pj: 0.4, byte_pj: 4.0, bytes_per_weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub invocations: u64,
    pub macs: u64,
    pub policy_pj: f64,
    /// Policy energy relative to the workload energy, in percent.
    pub percent: f64,
}

/// Each invocation runs `|RQ| + 1` timesteps (primer included) and fetches
/// the actor weights once.
pub fn overhead_energy(
    hidden: usize,
    num_sas: usize,
    rq_lengths: &[usize],
    constants: &OverheadConstants,
    workload_pj: f64,
) -> OverheadReport {
    let per_step = policy_mac_count(hidden, num_sas);
    let invocations = rq_lengths.len() as u64;
    let macs: u64 = rq_lengths.iter().map(|&r| per_step * (r as u64 + 1)).sum();
    let weight_bytes = policy_param_count(hidden, num_sas) as f64 * constants.bytes_per_weight;
    let policy_pj = macs as f64 * constants.mac_pj + invocations as f64 * weight_bytes * constants.byte_pj;
    let percent = if workload_pj > 0.0 { 100.0 * policy_pj / workload_pj } else { 0.0 };
    OverheadReport { invocations, macs, policy_pj, percent }
}
