//! Comparison policies: KL-UCB, SW-UCB, SW-TS, SW-KL-UCB, Rexp3, Ser4, and a
//! greedy oracle that replays the benchmark sequence.

mod greedy;
mod kl_ucb;
mod rexp3;
mod ser4;
mod sw_ts;
mod sw_ucb;
mod window;

pub use greedy::GreedyOracle;
pub use kl_ucb::{bernoulli_kl, kl_ucb_bound, kl_ucb_index, KlUcb, SwKlUcb, KL_TOLERANCE};
pub use rexp3::{rexp3_batch, rexp3_gamma, Rexp3};
pub use ser4::{ser4_radius, Ser4};
pub use sw_ts::{sw_ts_sample, SwTs};
pub use sw_ucb::{sw_ucb_index, SwUcb};
pub use window::SlidingWindow;

use serde::{Deserialize, Serialize};

use crate::bandit::ArmId;

/// Affine map from the configured reward range onto `[0, 1]`, clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScale {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RewardScale {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

impl RewardScale {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(hi > lo, "reward range must be non-empty");
        Self { lo, hi }
    }

    pub fn unit(&self, x: f64) -> f64 {
        ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

/// Per-policy settings, with defaults taken from each algorithm's
/// recommended tuning for a known horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub horizon: u64,
    pub kl_ucb_c: f64,
    pub sw_ucb_tau: usize,
    pub sw_ucb_xi: f64,
    pub sw_ts_tau: usize,
    pub sw_kl_ucb_tau: usize,
    pub rexp3_batch: u64,
    pub rexp3_gamma: f64,
    pub ser4_delta: f64,
    pub ser4_epsilon: f64,
    pub ser4_phi: f64,
}

impl BaselineParams {
    pub fn for_horizon(horizon: u64, num_arms: usize) -> Self {
        let t = horizon.max(2) as f64;
        let k = num_arms.max(1) as f64;
        // number of best-arm switches assumed by Ser4
        let switches = k;
        let batch = rexp3_batch(num_arms, horizon, k);
        Self {
            horizon,
            kl_ucb_c: 3.0,
            sw_ucb_tau: (4.0 * (t * t.ln()).sqrt()).ceil() as usize,
            sw_ucb_xi: 0.6,
            sw_ts_tau: t.sqrt().ceil() as usize,
            sw_kl_ucb_tau: t.powf(0.8).ceil() as usize,
            rexp3_batch: batch,
            rexp3_gamma: rexp3_gamma(num_arms, batch),
            ser4_delta: 1.0 / t,
            ser4_epsilon: 1.0 / (k * t),
            ser4_phi: (switches / (t * k) * (k * t).ln()).sqrt(),
        }
    }
}

/// Argmax with ties broken toward the lowest arm.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> ArmId {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    ArmId(best)
}
