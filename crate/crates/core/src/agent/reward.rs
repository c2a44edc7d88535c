use serde::{Deserialize, Serialize};

use crate::model::{Cycles, ReadyEntry};
use crate::sim::ProjectedOutcome;

/// Shaping constants of the per-period reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardCoefficients {
    /// Deadline hit reward.
    pub alpha: f64,
    /// Deadline miss penalty.
    pub beta: f64,
    /// Weight of the normalised slack.
    pub gamma_slack: f64,
    /// Weight of sub-jobs finishing beyond the current period, in [0, 1].
    pub delta: f64,
}

impl Default for RewardCoefficients {
    fn default() -> Self {
        RewardCoefficients { alpha: 0.10, beta: 0.11, gamma_slack: 0.05, delta: 0.01 }
    }
}

impl RewardCoefficients {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err("delta must lie in [0, 1]".into());
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma_slack < 0.0 {
            return Err("alpha, beta and gamma must be non-negative".into());
        }
        Ok(())
    }

    /// `A + gamma * slack` of one sub-job, before the period weighting.
    fn term(&self, entry: &ReadyEntry, outcome: ProjectedOutcome) -> f64 {
        match outcome {
            ProjectedOutcome::Finished(f) => {
                let deadline = entry.deadline();
                let hit = if f <= deadline { self.alpha } else { -self.beta };
                let slack = (deadline as f64 - f as f64) / entry.qos_latency.max(1) as f64;
                hit + self.gamma_slack * slack.clamp(-1.0, 1.0)
            }
            ProjectedOutcome::Dropped => -self.beta - self.gamma_slack,
        }
    }
}

/// `r_t = sum_l Delta_l (A_l + gamma * slack_l)` over the ready queue at
/// time `now`, where `Delta_l` is 1 for sub-jobs finishing before
/// `now + period` and `delta` otherwise. Dropped sub-jobs count as late
/// misses with slack -1.
pub fn compute_reward(
    coeffs: &RewardCoefficients,
    now: Cycles,
    period: Cycles,
    rq: &[ReadyEntry],
    outcomes: &[ProjectedOutcome],
) -> f64 {
    let horizon = now.saturating_add(period);
    rq.iter()
        .zip(outcomes)
        .map(|(entry, &outcome)| {
            let weight = match outcome {
                ProjectedOutcome::Finished(f) if f < horizon => 1.0,
                _ => coeffs.delta,
            };
            weight * coeffs.term(entry, outcome)
        })
        .sum()
}

/// Deadline-oriented score without the period weighting: hit reward or
/// miss penalty plus weighted normalised slack, summed over the queue.
pub fn sla_score(coeffs: &RewardCoefficients, rq: &[ReadyEntry], outcomes: &[ProjectedOutcome]) -> f64 {
    rq.iter().zip(outcomes).map(|(e, &o)| coeffs.term(e, o)).sum()
}
