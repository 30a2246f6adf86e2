use std::f64::consts::E;

use rand::Rng;

use crate::bandit::{ArmId, Policy, RewardSample, SimRng};

use super::RewardScale;

/// Restart period `⌈(K ln K)^{1/3} (T / V_T)^{2/3}⌉`, at least 1.
pub fn rexp3_batch(num_arms: usize, horizon: u64, variation_budget: f64) -> u64 {
    let k = num_arms as f64;
    let kk = k * k.ln();
    let batch = (kk.cbrt() * (horizon as f64 / variation_budget).powf(2.0 / 3.0)).ceil();
    (batch as u64).max(1)
}

/// Exploration rate `min(1, sqrt(K ln K / ((e − 1) Δ_T)))`.
pub fn rexp3_gamma(num_arms: usize, batch: u64) -> f64 {
    let k = num_arms as f64;
    (k * k.ln() / ((E - 1.0) * batch as f64)).sqrt().min(1.0)
}

/// Exp3 with uniform mixing, restarted every `batch` steps.
///
/// Weights are kept in log space.
#[derive(Debug, Clone)]
pub struct Rexp3 {
    batch: u64,
    gamma: f64,
    scale: RewardScale,
    log_w: Vec<f64>,
    probs: Vec<f64>,
}

impl Rexp3 {
    pub fn new(num_arms: usize, batch: u64, gamma: f64, scale: RewardScale) -> Self {
        assert!(batch >= 1);
        Self {
            batch,
            gamma,
            scale,
            log_w: vec![0.0; num_arms],
            probs: vec![1.0 / num_arms as f64; num_arms],
        }
    }

    /// Selection distribution `(1 − γ) w_i / Σw + γ / K` for the current weights.
    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.log_w.len() as f64;
        let max = self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_w.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        w.iter()
            .map(|wi| (1.0 - self.gamma) * wi / total + self.gamma / k)
            .collect()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }
}

impl Policy for Rexp3 {
    fn name(&self) -> &str {
        "Rexp3"
    }

    fn num_arms(&self) -> usize {
        self.log_w.len()
    }

    fn select(&mut self, step: u64, rng: &mut SimRng) -> ArmId {
        if (step.max(1) - 1) % self.batch == 0 {
            self.log_w.iter_mut().for_each(|l| *l = 0.0);
        }
        self.probs = self.probabilities();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return ArmId(i);
            }
        }
        ArmId(self.probs.len() - 1)
    }

    fn observe(&mut self, sample: &RewardSample, _rng: &mut SimRng) {
        let i = sample.arm.0;
        let k = self.log_w.len() as f64;
        let estimate = self.scale.unit(sample.value) / self.probs[i];
        self.log_w[i] += self.gamma * estimate / k;
    }

    fn reset(&mut self) {
        let k = self.log_w.len();
        self.log_w.iter_mut().for_each(|l| *l = 0.0);
        self.probs = vec![1.0 / k as f64; k];
    }
}
