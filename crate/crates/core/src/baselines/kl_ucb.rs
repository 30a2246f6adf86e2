use crate::bandit::{ArmId, Policy, RewardSample, SimRng};

use super::{argmax, RewardScale, SlidingWindow};

/// Width of the bisection bracket at termination.
pub const KL_TOLERANCE: f64 = 1e-6;

/// Bernoulli KL divergence `d(p, q)`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let q = q.clamp(0.0, 1.0);
    let term = |a: f64, b: f64| {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Largest `q ∈ [mean, 1]` with `n · d(mean, q) ≤ budget`, by bisection.
pub fn kl_ucb_bound(mean: f64, n: u64, budget: f64) -> f64 {
    let mean = mean.clamp(0.0, 1.0);
    if mean >= 1.0 {
        return 1.0;
    }
    let level = budget.max(0.0) / n as f64;
    let (mut lo, mut hi) = (mean, 1.0);
    if bernoulli_kl(mean, hi) <= level {
        return 1.0;
    }
    while hi - lo > KL_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if bernoulli_kl(mean, mid) > level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// KL-UCB index with exploration budget `ln t + c ln ln t` (floored at 0).
pub fn kl_ucb_index(mean: f64, n: u64, t: u64, c: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let lt = (t.max(1) as f64).ln();
    let budget = if lt > 0.0 { lt + c * lt.ln() } else { 0.0 };
    kl_ucb_bound(mean, n, budget)
}

/// Stationary KL-UCB over the full history.
#[derive(Debug, Clone)]
pub struct KlUcb {
    c: f64,
    scale: RewardScale,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl KlUcb {
    pub fn new(num_arms: usize, c: f64, scale: RewardScale) -> Self {
        Self {
            c,
            scale,
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
        }
    }

    pub fn index(&self, arm: ArmId, t: u64) -> f64 {
        let n = self.counts[arm.0];
        if n == 0 {
            return f64::INFINITY;
        }
        kl_ucb_index(self.sums[arm.0] / n as f64, n, t, self.c)
    }
}

impl Policy for KlUcb {
    fn name(&self) -> &str {
        "KL-UCB"
    }

    fn num_arms(&self) -> usize {
        self.counts.len()
    }

    fn select(&mut self, step: u64, _rng: &mut SimRng) -> ArmId {
        argmax((0..self.counts.len()).map(|i| self.index(ArmId(i), step)))
    }

    fn observe(&mut self, sample: &RewardSample, _rng: &mut SimRng) {
        let i = sample.arm.0;
        self.counts[i] += 1;
        self.sums[i] += self.scale.unit(sample.value);
    }

    fn reset(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.sums.iter_mut().for_each(|s| *s = 0.0);
    }
}

/// KL-UCB restricted to the last `tau` global steps.
#[derive(Debug, Clone)]
pub struct SwKlUcb {
    c: f64,
    scale: RewardScale,
    window: SlidingWindow,
    ever: Vec<bool>,
}

impl SwKlUcb {
    pub fn new(num_arms: usize, tau: usize, c: f64, scale: RewardScale) -> Self {
        Self {
            c,
            scale,
            window: SlidingWindow::new(num_arms, tau),
            ever: vec![false; num_arms],
        }
    }

    pub fn index(&self, arm: ArmId, t: u64) -> f64 {
        if !self.ever[arm.0] {
            return f64::INFINITY;
        }
        let n = self.window.count(arm);
        match self.window.mean(arm) {
            None => f64::INFINITY,
            Some(m) => kl_ucb_index(m, n, t.min(self.window.tau() as u64), self.c),
        }
    }
}

impl Policy for SwKlUcb {
    fn name(&self) -> &str {
        "SW-KL-UCB"
    }

    fn num_arms(&self) -> usize {
        self.ever.len()
    }

    fn select(&mut self, step: u64, _rng: &mut SimRng) -> ArmId {
        argmax((0..self.ever.len()).map(|i| self.index(ArmId(i), step)))
    }

    fn observe(&mut self, sample: &RewardSample, _rng: &mut SimRng) {
        self.ever[sample.arm.0] = true;
        self.window.push(sample.arm, self.scale.unit(sample.value));
    }

    fn reset(&mut self) {
        self.window.clear();
        self.ever.iter_mut().for_each(|e| *e = false);
    }
}
