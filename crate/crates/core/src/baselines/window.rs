use std::collections::VecDeque;

use crate::bandit::ArmId;

/// The last `tau` (arm, reward) pairs in global time, with per-arm counts
/// and sums kept in step.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    tau: usize,
    log: VecDeque<(ArmId, f64)>,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl SlidingWindow {
    pub fn new(num_arms: usize, tau: usize) -> Self {
        assert!(tau >= 1, "window length must be positive");
        Self {
            tau,
            log: VecDeque::with_capacity(tau.min(1 << 20)),
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
        }
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn push(&mut self, arm: ArmId, reward: f64) {
        if self.log.len() == self.tau {
            if let Some((old, r)) = self.log.pop_front() {
                self.counts[old.0] -= 1;
                self.sums[old.0] -= r;
                if self.counts[old.0] == 0 {
                    // no drift left over once an arm leaves the window
                    self.sums[old.0] = 0.0;
                }
            }
        }
        self.log.push_back((arm, reward));
        self.counts[arm.0] += 1;
        self.sums[arm.0] += reward;
    }

    pub fn count(&self, arm: ArmId) -> u64 {
        self.counts[arm.0]
    }

    pub fn sum(&self, arm: ArmId) -> f64 {
        self.sums[arm.0]
    }

    pub fn mean(&self, arm: ArmId) -> Option<f64> {
        match self.counts[arm.0] {
            0 => None,
            c => Some(self.sums[arm.0] / c as f64),
        }
    }

    pub fn clear(&mut self) {
        self.log.clear();
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.sums.iter_mut().for_each(|s| *s = 0.0);
    }
}
