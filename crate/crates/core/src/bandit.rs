//! Rested-bandit interaction contract.
//!
//! An arm's reward distribution depends only on how many times *that arm* has
//! been pulled. Environments expose the mean as a pure function of
//! `(arm, pull_index)`, and [`run_episode`] gives every arm its own RNG
//! stream so the k-th pull of an arm sees the same draw regardless of how
//! pulls of other arms are interleaved.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// RNG used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Stream id reserved for the policy's own randomness.
const POLICY_STREAM: u64 = u64::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("horizon must be at least 1")]
    EmptyRun,
    #[error("environment has {env} arms but policy expects {policy}")]
    ArmMismatch { env: usize, policy: usize },
    #[error("arm {arm} exhausted after {limit} pulls")]
    TraceExhausted { arm: usize, limit: u64 },
}

/// Index of an arm in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One observed reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    pub arm: ArmId,
    /// Number of pulls of `arm` including this one (starts at 1).
    pub pull_index: u64,
    /// Global step, starting at 1.
    pub global_step: u64,
    pub value: f64,
}

/// A change point flagged by a policy: `arm` was reset at `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub arm: ArmId,
    pub step: u64,
}

/// Per-arm observation log since the last reset.
///
/// Observation `j` (0-based) was taken at pull `j + 1` since reset. Running
/// sums of `y` and `s * y` make the full-history least-squares extrapolation
/// O(1); the abscissa sums are closed-form in `n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmState {
    values: Vec<f64>,
    sum_y: f64,
    sum_sy: f64,
    last_reset_step: u64,
}

impl ArmState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pulls_since_reset(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn last_reset_step(&self) -> u64 {
        self.last_reset_step
    }

    /// Observed values in pull order since the last reset.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(pull_index_since_reset, value)` pairs.
    pub fn observations(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values.iter().enumerate().map(|(j, &v)| (j as u64 + 1, v))
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn push(&mut self, value: f64) {
        self.values.push(value);
        let s = self.values.len() as f64;
        self.sum_y += value;
        self.sum_sy += s * value;
    }

    /// Drop every observation except the newest and mark a reset at `step`.
    pub fn reset_keep_last(&mut self, step: u64) {
        let last = self.values.last().copied();
        self.clear();
        self.last_reset_step = step;
        if let Some(v) = last {
            self.push(v);
        }
    }

    pub fn clear(&mut self) {
        self.values.clear();
        self.sum_y = 0.0;
        self.sum_sy = 0.0;
        self.last_reset_step = 0;
    }

    /// Least-squares extrapolation to pull `n + 1` from the running sums.
    ///
    /// Returns `None` for fewer than two observations.
    pub fn trend_prediction(&self) -> Option<f64> {
        let n = self.values.len();
        if n < 2 {
            return None;
        }
        let nf = n as f64;
        let mean_s = (nf + 1.0) / 2.0;
        let mean_y = self.sum_y / nf;
        let sxx = nf * (nf * nf - 1.0) / 12.0;
        let sxy = self.sum_sy - mean_s * self.sum_y;
        let slope = sxy / sxx;
        Some(mean_y + slope * (nf + 1.0 - mean_s))
    }
}

/// The select/observe contract every algorithm implements.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn num_arms(&self) -> usize;

    /// Choose the arm to pull at `step` (1-based).
    fn select(&mut self, step: u64, rng: &mut SimRng) -> ArmId;

    /// Feed back the reward of the arm chosen by the preceding `select`.
    fn observe(&mut self, sample: &RewardSample, rng: &mut SimRng);

    /// Forget all history.
    fn reset(&mut self);

    /// Change points flagged so far (empty for policies without detection).
    fn detections(&self) -> &[Detection] {
        &[]
    }
}

/// A rested reward source.
pub trait Environment: Send + Sync {
    fn num_arms(&self) -> usize;

    /// Expected reward of `arm` at its `pull_index`-th pull.
    fn mean(&self, arm: ArmId, pull_index: u64) -> f64;

    /// Draw a reward for `arm` at its `pull_index`-th pull.
    fn sample(&self, arm: ArmId, pull_index: u64, rng: &mut SimRng) -> f64;

    /// Maximum number of pulls supported for `arm`, if bounded.
    fn pull_limit(&self, _arm: ArmId) -> Option<u64> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for &E {
    fn num_arms(&self) -> usize {
        (**self).num_arms()
    }
    fn mean(&self, arm: ArmId, pull_index: u64) -> f64 {
        (**self).mean(arm, pull_index)
    }
    fn sample(&self, arm: ArmId, pull_index: u64, rng: &mut SimRng) -> f64 {
        (**self).sample(arm, pull_index, rng)
    }
    fn pull_limit(&self, arm: ArmId) -> Option<u64> {
        (**self).pull_limit(arm)
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn num_arms(&self) -> usize {
        (**self).num_arms()
    }
    fn mean(&self, arm: ArmId, pull_index: u64) -> f64 {
        (**self).mean(arm, pull_index)
    }
    fn sample(&self, arm: ArmId, pull_index: u64, rng: &mut SimRng) -> f64 {
        (**self).sample(arm, pull_index, rng)
    }
    fn pull_limit(&self, arm: ArmId) -> Option<u64> {
        (**self).pull_limit(arm)
    }
}

/// SplitMix64 finalizer; used to derive child seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent reward stream for one arm.
pub fn arm_stream(seed: u64, arm: ArmId) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(arm.0 as u64);
    rng
}

/// Stream for the policy's internal randomness.
pub fn policy_stream(seed: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(POLICY_STREAM);
    rng
}

/// Play `policy` against `env` for `horizon` steps.
///
/// The policy is reset first. Rewards for arm `i` are drawn from
/// [`arm_stream`]`(seed, i)`; the policy draws from [`policy_stream`]`(seed)`.
pub fn run_episode<E, P>(
    env: &E,
    policy: &mut P,
    horizon: u64,
    seed: u64,
) -> Result<Vec<RewardSample>, BanditError>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
{
    if horizon == 0 {
        return Err(BanditError::EmptyRun);
    }
    let k = env.num_arms();
    if k != policy.num_arms() || k == 0 {
        return Err(BanditError::ArmMismatch {
            env: k,
            policy: policy.num_arms(),
        });
    }
    policy.reset();
    let mut arm_rngs: Vec<SimRng> = (0..k).map(|i| arm_stream(seed, ArmId(i))).collect();
    let mut policy_rng = policy_stream(seed);
    let mut pulls = vec![0u64; k];
    let mut samples = Vec::with_capacity(horizon as usize);

    for step in 1..=horizon {
        let arm = policy.select(step, &mut policy_rng);
        let i = arm.index();
        let pull_index = pulls[i] + 1;
        if let Some(limit) = env.pull_limit(arm) {
            if pull_index > limit {
                return Err(BanditError::TraceExhausted { arm: i, limit });
            }
        }
        pulls[i] = pull_index;
        let value = env.sample(arm, pull_index, &mut arm_rngs[i]);
        let sample = RewardSample {
            arm,
            pull_index,
            global_step: step,
            value,
        };
        policy.observe(&sample, &mut policy_rng);
        samples.push(sample);
    }
    Ok(samples)
}

/// Per-arm pull counts of a run.
pub fn pull_counts(samples: &[RewardSample], num_arms: usize) -> Vec<u64> {
    let mut counts = vec![0u64; num_arms];
    for s in samples {
        counts[s.arm.index()] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    struct Constant(Vec<f64>);

    impl Environment for Constant {
        fn num_arms(&self) -> usize {
            self.0.len()
        }
        fn mean(&self, arm: ArmId, _pull_index: u64) -> f64 {
            self.0[arm.0]
        }
        fn sample(&self, arm: ArmId, _pull_index: u64, _rng: &mut SimRng) -> f64 {
            self.0[arm.0]
        }
    }

    /// Uniform noise on top of a per-arm constant.
    struct Noisy(Vec<f64>);

    impl Environment for Noisy {
        fn num_arms(&self) -> usize {
            self.0.len()
        }
        fn mean(&self, arm: ArmId, _pull_index: u64) -> f64 {
            self.0[arm.0]
        }
        fn sample(&self, arm: ArmId, _pull_index: u64, rng: &mut SimRng) -> f64 {
            self.0[arm.0] + rng.random::<f64>() - 0.5
        }
    }

    /// Pulls arms in a fixed cyclic script.
    struct Scripted {
        k: usize,
        script: Vec<usize>,
        pos: usize,
    }

    impl Policy for Scripted {
        fn name(&self) -> &str {
            "scripted"
        }
        fn num_arms(&self) -> usize {
            self.k
        }
        fn select(&mut self, _step: u64, _rng: &mut SimRng) -> ArmId {
            let a = self.script[self.pos % self.script.len()];
            self.pos += 1;
            ArmId(a)
        }
        fn observe(&mut self, _sample: &RewardSample, _rng: &mut SimRng) {}
        fn reset(&mut self) {
            self.pos = 0;
        }
    }

    /// Picks the arm with the best running mean after one pull each.
    struct Greedy {
        sums: Vec<f64>,
        counts: Vec<u64>,
    }

    impl Policy for Greedy {
        fn name(&self) -> &str {
            "greedy"
        }
        fn num_arms(&self) -> usize {
            self.sums.len()
        }
        fn select(&mut self, _step: u64, _rng: &mut SimRng) -> ArmId {
            if let Some(i) = self.counts.iter().position(|&c| c == 0) {
                return ArmId(i);
            }
            let mut best = 0;
            for i in 1..self.sums.len() {
                if self.sums[i] / self.counts[i] as f64 > self.sums[best] / self.counts[best] as f64 {
                    best = i;
                }
            }
            ArmId(best)
        }
        fn observe(&mut self, s: &RewardSample, _rng: &mut SimRng) {
            self.sums[s.arm.0] += s.value;
            self.counts[s.arm.0] += 1;
        }
        fn reset(&mut self) {
            self.sums.iter_mut().for_each(|x| *x = 0.0);
            self.counts.iter_mut().for_each(|x| *x = 0);
        }
    }

    #[test]
    fn single_arm_forces_sequence() {
        let env = Constant(vec![0.3]);
        let mut p = Scripted { k: 1, script: vec![0], pos: 0 };
        let out = run_episode(&env, &mut p, 5, 1).unwrap();
        assert_eq!(out.len(), 5);
        for (j, s) in out.iter().enumerate() {
            assert_eq!(s.arm, ArmId(0));
            assert_eq!(s.pull_index, j as u64 + 1);
            assert_eq!(s.global_step, j as u64 + 1);
        }
    }

    #[test]
    fn zero_noise_samples_equal_means() {
        let env = Constant(vec![0.2, 0.7, 0.4]);
        let mut p = Greedy { sums: vec![0.0; 3], counts: vec![0; 3] };
        let out = run_episode(&env, &mut p, 20, 9).unwrap();
        for s in &out {
            assert_eq!(s.value, env.0[s.arm.0]);
        }
        assert_eq!(pull_counts(&out, 3).iter().sum::<u64>(), 20);
        assert!(out[3..].iter().all(|s| s.arm == ArmId(1)));
    }

    #[test]
    fn repeated_runs_are_identical() {
        let env = Noisy(vec![0.2, 0.5]);
        let mut p = Greedy { sums: vec![0.0; 2], counts: vec![0; 2] };
        let a = run_episode(&env, &mut p, 200, 42).unwrap();
        let b = run_episode(&env, &mut p, 200, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        let env = Constant(vec![0.1, 0.2]);
        let mut p = Scripted { k: 2, script: vec![0], pos: 0 };
        assert_eq!(run_episode(&env, &mut p, 0, 0), Err(BanditError::EmptyRun));
        let mut p3 = Scripted { k: 3, script: vec![0], pos: 0 };
        assert_eq!(
            run_episode(&env, &mut p3, 4, 0),
            Err(BanditError::ArmMismatch { env: 2, policy: 3 })
        );
    }

    #[test]
    fn rested_draws_ignore_interleaving() {
        let env = Noisy(vec![0.0, 0.0, 0.0]);
        let mut a = Scripted { k: 3, script: vec![0, 1, 2], pos: 0 };
        let mut b = Scripted { k: 3, script: vec![2, 2, 0, 1, 1, 0], pos: 0 };
        let ra = run_episode(&env, &mut a, 60, 5).unwrap();
        let rb = run_episode(&env, &mut b, 60, 5).unwrap();
        for arm in 0..3 {
            let xa: Vec<f64> = ra.iter().filter(|s| s.arm.0 == arm).map(|s| s.value).collect();
            let xb: Vec<f64> = rb.iter().filter(|s| s.arm.0 == arm).map(|s| s.value).collect();
            let m = xa.len().min(xb.len());
            assert!(m >= 10);
            assert_eq!(xa[..m], xb[..m]);
        }
    }

    #[test]
    fn running_trend_matches_direct_fit() {
        let mut st = ArmState::new();
        assert_eq!(st.trend_prediction(), None);
        for v in [0.1, 0.4, 0.2, 0.5] {
            st.push(v);
        }
        // slope 0.1, intercept 0.05
        approx::assert_abs_diff_eq!(st.trend_prediction().unwrap(), 0.55, epsilon = 1e-12);
        st.reset_keep_last(17);
        assert_eq!(st.values(), &[0.5]);
        assert_eq!(st.last_reset_step(), 17);
        assert_eq!(st.pulls_since_reset(), 1);
    }
}
