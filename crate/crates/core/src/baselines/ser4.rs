use rand::seq::SliceRandom;
use rand::Rng;

use crate::bandit::{ArmId, Policy, RewardSample, SimRng};

use super::RewardScale;

/// Elimination radius after `rounds` completed rounds:
/// `sqrt(ln(4 K r² / δ) / (2r))`.
pub fn ser4_radius(rounds: u64, num_arms: usize, delta: f64) -> f64 {
    let r = rounds as f64;
    ((4.0 * num_arms as f64 * r * r / delta).ln() / (2.0 * r)).sqrt()
}

/// Successive elimination with randomized round-robin and random resets.
///
/// Each round plays every surviving arm once in shuffled order. After a round
/// an arm is dropped when `best − mean + ε ≥ 2 · radius`; the empirical
/// leader is never dropped. Before every step after the first, all arms are
/// restored and statistics cleared with probability `φ`.
#[derive(Debug, Clone)]
pub struct Ser4 {
    delta: f64,
    epsilon: f64,
    phi: f64,
    scale: RewardScale,
    active: Vec<bool>,
    sums: Vec<f64>,
    rounds: u64,
    order: Vec<usize>,
    pos: usize,
    resets: u64,
}

impl Ser4 {
    pub fn new(num_arms: usize, delta: f64, epsilon: f64, phi: f64, scale: RewardScale) -> Self {
        Self {
            delta,
            epsilon,
            phi,
            scale,
            active: vec![true; num_arms],
            sums: vec![0.0; num_arms],
            rounds: 0,
            order: Vec::new(),
            pos: 0,
            resets: 0,
        }
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn resets(&self) -> u64 {
        self.resets
    }

    fn restart(&mut self) {
        self.active.iter_mut().for_each(|a| *a = true);
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        self.rounds = 0;
        self.order.clear();
        self.pos = 0;
    }

    fn eliminate(&mut self) {
        let r = self.rounds as f64;
        let k = self.active.len();
        let radius = ser4_radius(self.rounds, k, self.delta);
        let means: Vec<f64> = self.sums.iter().map(|s| s / r).collect();
        let mut leader = None;
        for i in (0..k).filter(|&i| self.active[i]) {
            if leader.is_none_or(|l: usize| means[i] > means[l]) {
                leader = Some(i);
            }
        }
        let Some(leader) = leader else { return };
        for i in 0..k {
            if i != leader && self.active[i] && means[leader] - means[i] + self.epsilon >= 2.0 * radius {
                self.active[i] = false;
            }
        }
    }
}

impl Policy for Ser4 {
    fn name(&self) -> &str {
        "Ser4"
    }

    fn num_arms(&self) -> usize {
        self.active.len()
    }

    fn select(&mut self, step: u64, rng: &mut SimRng) -> ArmId {
        if step > 1 && rng.random::<f64>() < self.phi {
            self.restart();
            self.resets += 1;
        }
        if self.pos >= self.order.len() {
            self.order = (0..self.active.len()).filter(|&i| self.active[i]).collect();
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let arm = self.order[self.pos];
        self.pos += 1;
        ArmId(arm)
    }

    fn observe(&mut self, sample: &RewardSample, _rng: &mut SimRng) {
        self.sums[sample.arm.0] += self.scale.unit(sample.value);
        if self.pos == self.order.len() {
            self.rounds += 1;
            self.eliminate();
        }
    }

    fn reset(&mut self) {
        self.restart();
        self.resets = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::policy_stream;

    fn play(p: &mut Ser4, means: &[f64], steps: u64, seed: u64) -> Vec<ArmId> {
        let mut rng = policy_stream(seed);
        (1..=steps)
            .map(|t| {
                let a = p.select(t, &mut rng);
                p.observe(&RewardSample { arm: a, pull_index: 1, global_step: t, value: means[a.0] }, &mut rng);
                a
            })
            .collect()
    }

    #[test]
    fn single_arm_never_eliminated() {
        let mut p = Ser4::new(1, 1e-3, 1e-3, 0.0, RewardScale::default());
        let arms = play(&mut p, &[0.4], 500, 0);
        assert!(arms.iter().all(|a| a.0 == 0));
        assert!(p.active()[0]);
    }

    #[test]
    fn close_arms_survive() {
        let mut p = Ser4::new(2, 0.01, 0.0, 0.0, RewardScale::default());
        play(&mut p, &[0.5, 0.45], 40, 1);
        assert_eq!(p.rounds(), 20);
        assert!(ser4_radius(20, 2, 0.01) * 2.0 > 0.05);
        assert_eq!(p.active(), &[true, true]);
    }

    #[test]
    fn elimination_round_matches_radius_replay() {
        let (delta, eps) = (0.01, 1e-4);
        let first = (1u64..)
            .find(|&r| 0.8 + eps >= 2.0 * ser4_radius(r, 2, delta))
            .unwrap();
        let mut p = Ser4::new(2, delta, eps, 0.0, RewardScale::default());
        play(&mut p, &[0.9, 0.1], 2 * (first - 1), 2);
        assert_eq!(p.active(), &[true, true]);
        play_more(&mut p, &[0.9, 0.1], 2 * (first - 1) + 1, 2 * first);
        assert_eq!(p.active(), &[true, false]);
    }

    fn play_more(p: &mut Ser4, means: &[f64], from: u64, to: u64) {
        let mut rng = policy_stream(99);
        for t in from..=to {
            let a = p.select(t, &mut rng);
            p.observe(&RewardSample { arm: a, pull_index: 1, global_step: t, value: means[a.0] }, &mut rng);
        }
    }

    #[test]
    fn certain_reset_restores_arms() {
        let mut p = Ser4::new(2, 0.5, 0.5, 0.0, RewardScale::default());
        play(&mut p, &[1.0, 0.0], 40, 5);
        assert_eq!(p.active(), &[true, false]);
        p.phi = 1.0;
        let mut rng = policy_stream(6);
        p.select(41, &mut rng);
        assert_eq!(p.resets(), 1);
        assert_eq!(p.active(), &[true, true]);
    }
}
