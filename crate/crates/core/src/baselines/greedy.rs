use crate::bandit::{ArmId, Environment, Policy, RewardSample, SimRng};
use crate::regret::greedy_allocation;

/// Replays the greedy benchmark sequence. Used to sanity-check regret
/// accounting: its expected regret is zero by construction.
#[derive(Debug, Clone)]
pub struct GreedyOracle {
    num_arms: usize,
    sequence: Vec<ArmId>,
    pos: usize,
}

impl GreedyOracle {
    pub fn new(num_arms: usize, sequence: Vec<ArmId>) -> Self {
        Self {
            num_arms,
            sequence,
            pos: 0,
        }
    }

    pub fn from_env<E: Environment + ?Sized>(env: &E, horizon: u64) -> Self {
        let alloc = greedy_allocation(env, horizon);
        Self::new(env.num_arms(), alloc.sequence)
    }
}

impl Policy for GreedyOracle {
    fn name(&self) -> &str {
        "Greedy"
    }

    fn num_arms(&self) -> usize {
        self.num_arms
    }

    fn select(&mut self, _step: u64, _rng: &mut SimRng) -> ArmId {
        let arm = self.sequence.get(self.pos).copied().unwrap_or(ArmId(0));
        self.pos += 1;
        arm
    }

    fn observe(&mut self, _sample: &RewardSample, _rng: &mut SimRng) {}

    fn reset(&mut self) {
        self.pos = 0;
    }
}
