//! Rested-bandit simulation: a trend-predicting UCB policy with two-window
//! change detection, comparison policies, synthetic and replayed
//! environments, greedy-benchmark regret, and a seeded experiment harness.

pub mod bandit;
pub mod baselines;
pub mod env;
pub mod estimator;
pub mod harness;
pub mod regret;
pub mod tiucb;

pub use bandit::{
    run_episode, ArmId, ArmState, BanditError, Detection, Environment, Policy, RewardSample, SimRng,
};
pub use tiucb::{TiUcb, TiUcbParams};
