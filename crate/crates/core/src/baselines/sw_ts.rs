use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::bandit::{ArmId, Policy, RewardSample, SimRng};

use super::{argmax, RewardScale, SlidingWindow};

/// Draw from `Beta(1 + successes, 1 + failures)`.
pub fn sw_ts_sample(successes: u64, failures: u64, rng: &mut SimRng) -> f64 {
    let beta = Beta::new(1.0 + successes as f64, 1.0 + failures as f64)
        .expect("beta parameters are at least 1");
    beta.sample(rng)
}

/// Sliding-window Thompson sampling on binarized rewards.
///
/// Each reward `r ∈ [0, 1]` is turned into a Bernoulli success with
/// probability `r` when observed; the window keeps the binary outcomes.
#[derive(Debug, Clone)]
pub struct SwTs {
    scale: RewardScale,
    window: SlidingWindow,
    ever: Vec<bool>,
}

impl SwTs {
    pub fn new(num_arms: usize, tau: usize, scale: RewardScale) -> Self {
        Self {
            scale,
            window: SlidingWindow::new(num_arms, tau),
            ever: vec![false; num_arms],
        }
    }

    /// Windowed (successes, failures) for `arm`.
    pub fn counts(&self, arm: ArmId) -> (u64, u64) {
        let n = self.window.count(arm);
        let s = self.window.sum(arm).round() as u64;
        (s, n - s)
    }
}

impl Policy for SwTs {
    fn name(&self) -> &str {
        "SW-TS"
    }

    fn num_arms(&self) -> usize {
        self.ever.len()
    }

    fn select(&mut self, _step: u64, rng: &mut SimRng) -> ArmId {
        if let Some(i) = self.ever.iter().position(|e| !e) {
            return ArmId(i);
        }
        let draws: Vec<f64> = (0..self.ever.len())
            .map(|i| {
                let (s, f) = self.counts(ArmId(i));
                sw_ts_sample(s, f, rng)
            })
            .collect();
        argmax(draws)
    }

    fn observe(&mut self, sample: &RewardSample, rng: &mut SimRng) {
        let p = self.scale.unit(sample.value);
        let success = rng.random::<f64>() < p;
        self.ever[sample.arm.0] = true;
        self.window.push(sample.arm, if success { 1.0 } else { 0.0 });
    }

    fn reset(&mut self) {
        self.window.clear();
        self.ever.iter_mut().for_each(|e| *e = false);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::policy_stream;

    #[test]
    fn empty_window_is_uniform() {
        let mut rng = policy_stream(3);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| sw_ts_sample(0, 0, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let below = xs.iter().filter(|&&x| x < 0.25).count() as f64 / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
        assert!((below - 0.25).abs() < 0.015);
    }

    #[test]
    fn all_successes_posterior_mean() {
        let mut p = SwTs::new(1, 50, RewardScale::default());
        let mut rng = policy_stream(1);
        for t in 1..=10u64 {
            p.observe(&RewardSample { arm: ArmId(0), pull_index: t, global_step: t, value: 1.0 }, &mut rng);
        }
        assert_eq!(p.counts(ArmId(0)), (10, 0));
        let n = 40_000;
        let mean = (0..n).map(|_| sw_ts_sample(10, 0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 11.0 / 12.0).abs() < 0.003);
    }

    #[test]
    fn binarization_replay() {
        let tau = 7;
        let rewards: Vec<(usize, f64)> = (0..40).map(|j| (j % 3 % 2, ((j * 13) % 10) as f64 / 10.0)).collect();
        let mut p = SwTs::new(2, tau, RewardScale::default());
        let mut rng = policy_stream(11);
        for (t, &(a, r)) in rewards.iter().enumerate() {
            p.observe(&RewardSample { arm: ArmId(a), pull_index: 1, global_step: t as u64 + 1, value: r }, &mut rng);
        }
        let mut replay = policy_stream(11);
        let bits: Vec<(usize, bool)> = rewards.iter().map(|&(a, r)| (a, replay.random::<f64>() < r)).collect();
        let recent = &bits[bits.len() - tau..];
        for arm in 0..2 {
            let s = recent.iter().filter(|&&(a, b)| a == arm && b).count() as u64;
            let f = recent.iter().filter(|&&(a, b)| a == arm && !b).count() as u64;
            assert_eq!(p.counts(ArmId(arm)), (s, f));
        }
    }
}
