use crate::bandit::{ArmId, Policy, RewardSample, SimRng};

use super::{argmax, SlidingWindow};

/// Sliding-window UCB index: windowed mean plus `sqrt(ξ ln(min(t, τ)) / N)`.
pub fn sw_ucb_index(window_mean: Option<f64>, window_count: u64, t: u64, tau: usize, xi: f64) -> f64 {
    match window_mean {
        Some(m) if window_count > 0 => {
            let horizon = t.min(tau as u64).max(1) as f64;
            m + (xi * horizon.ln() / window_count as f64).sqrt()
        }
        _ => f64::INFINITY,
    }
}

/// SW-UCB on raw rewards.
#[derive(Debug, Clone)]
pub struct SwUcb {
    xi: f64,
    window: SlidingWindow,
}

impl SwUcb {
    pub fn new(num_arms: usize, tau: usize, xi: f64) -> Self {
        Self {
            xi,
            window: SlidingWindow::new(num_arms, tau),
        }
    }

    pub fn index(&self, arm: ArmId, t: u64) -> f64 {
        sw_ucb_index(
            self.window.mean(arm),
            self.window.count(arm),
            t,
            self.window.tau(),
            self.xi,
        )
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }
}

impl Policy for SwUcb {
    fn name(&self) -> &str {
        "SW-UCB"
    }

    fn num_arms(&self) -> usize {
        self.window.num_arms()
    }

    fn select(&mut self, step: u64, _rng: &mut SimRng) -> ArmId {
        argmax((0..self.window.num_arms()).map(|i| self.index(ArmId(i), step)))
    }

    fn observe(&mut self, sample: &RewardSample, _rng: &mut SimRng) {
        self.window.push(sample.arm, sample.value);
    }

    fn reset(&mut self) {
        self.window.clear();
    }
}
