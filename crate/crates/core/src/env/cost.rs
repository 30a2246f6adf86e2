use serde::{Deserialize, Serialize};

use crate::bandit::{ArmId, Environment, SimRng};

fn default_stall_window() -> u64 {
    100
}

fn default_stall_threshold() -> f64 {
    0.1
}

/// Finetuning cost model. `costs[i]` is charged per active pull of arm `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub costs: Vec<f64>,
    #[serde(default = "default_stall_window")]
    pub stall_window: u64,
    #[serde(default = "default_stall_threshold")]
    pub stall_threshold: f64,
}

impl CostParams {
    pub fn uniform(cost: f64, num_arms: usize) -> Self {
        Self {
            costs: vec![cost; num_arms],
            stall_window: default_stall_window(),
            stall_threshold: default_stall_threshold(),
        }
    }
}

/// Subtracts accumulated finetuning cost from an inner environment.
///
/// Finetuning of an arm stops for good once its inner mean has gone
/// `stall_window` consecutive pulls without exceeding the mean at the last
/// improvement by more than `stall_threshold`. The pull at which that happens
/// is the last one charged. A pull sees the cost accumulated over the pulls
/// before it, so pull `n` is reduced by `m · min(n − 1, stop)`.
///
/// The stop pull depends only on the inner means, so it is computed once up
/// to the horizon and the wrapper stays immutable during an episode.
#[derive(Debug, Clone)]
pub struct CostAdjusted<E> {
    inner: E,
    params: CostParams,
    stop: Vec<Option<u64>>,
}

impl<E: Environment> CostAdjusted<E> {
    pub fn new(inner: E, params: CostParams, horizon: u64) -> Self {
        assert_eq!(params.costs.len(), inner.num_arms(), "one cost per arm");
        let stop = (0..inner.num_arms())
            .map(|i| stall_point(&inner, ArmId(i), &params, horizon))
            .collect();
        Self { inner, params, stop }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    /// Last charged pull of `arm`, or `None` if finetuning never stops
    /// within the horizon.
    pub fn stop_pull(&self, arm: ArmId) -> Option<u64> {
        self.stop[arm.0]
    }

    /// Cost deducted from the `pull_index`-th pull.
    pub fn eta(&self, arm: ArmId, pull_index: u64) -> f64 {
        let charged = pull_index.saturating_sub(1);
        let charged = self.stop[arm.0].map_or(charged, |s| charged.min(s));
        self.params.costs[arm.0] * charged as f64
    }
}

fn stall_point<E: Environment>(env: &E, arm: ArmId, p: &CostParams, horizon: u64) -> Option<u64> {
    let mut reference = env.mean(arm, 1);
    let mut idle = 0;
    for n in 2..=horizon {
        let m = env.mean(arm, n);
        if m > reference + p.stall_threshold {
            reference = m;
            idle = 0;
        } else {
            idle += 1;
            if idle >= p.stall_window {
                return Some(n);
            }
        }
    }
    None
}

impl<E: Environment> Environment for CostAdjusted<E> {
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    fn mean(&self, arm: ArmId, pull_index: u64) -> f64 {
        self.inner.mean(arm, pull_index) - self.eta(arm, pull_index)
    }

    fn sample(&self, arm: ArmId, pull_index: u64, rng: &mut SimRng) -> f64 {
        self.inner.sample(arm, pull_index, rng) - self.eta(arm, pull_index)
    }

    fn pull_limit(&self, arm: ArmId) -> Option<u64> {
        self.inner.pull_limit(arm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::policy_stream;
    use crate::env::{ArmModel, PiecewiseLinearArm, SyntheticEnv};
    use approx::assert_abs_diff_eq;

    fn ramp(slope: f64, nu: u64, noise: f64) -> SyntheticEnv {
        SyntheticEnv::new(
            vec![ArmModel::Piecewise(PiecewiseLinearArm::continuous(slope, 0.0, nu))],
            noise,
        )
    }

    #[test]
    fn zero_cost_is_transparent() {
        let inner = ramp(0.01, 30, 0.1);
        let w = CostAdjusted::new(inner.clone(), CostParams::uniform(0.0, 1), 500);
        for n in 1..200 {
            let a = inner.sample(ArmId(0), n, &mut policy_stream(n));
            let b = w.sample(ArmId(0), n, &mut policy_stream(n));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cost_accumulates() {
        let w = CostAdjusted::new(ramp(0.5, 1000, 0.0), CostParams::uniform(0.01, 1), 1000);
        assert_eq!(w.eta(ArmId(0), 1), 0.0);
        assert_abs_diff_eq!(w.eta(ArmId(0), 4), 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(w.mean(ArmId(0), 4), 2.0 - 0.03, epsilon = 1e-12);
    }

    #[test]
    fn stall_replay() {
        // steep until pull 50, flat afterwards
        let w = CostAdjusted::new(ramp(0.2, 50, 0.0), CostParams::uniform(0.01, 1), 1000);
        assert_eq!(w.stop_pull(ArmId(0)), Some(150));

        let mut reference = w.inner().mean(ArmId(0), 1);
        let (mut idle, mut eta, mut active) = (0, 0.0, true);
        for n in 1..=400u64 {
            assert_abs_diff_eq!(w.eta(ArmId(0), n), eta, epsilon = 1e-12);
            if n > 1 {
                let m = w.inner().mean(ArmId(0), n);
                if m > reference + 0.1 {
                    reference = m;
                    idle = 0;
                } else {
                    idle += 1;
                }
            }
            if active {
                eta += 0.01;
            }
            if idle == 100 {
                active = false;
            }
        }
        assert_abs_diff_eq!(w.eta(ArmId(0), 400), 1.5, epsilon = 1e-12);
    }
}
