//! Reward-generating environments.

mod arms;
mod cost;
mod trace;

pub use arms::{ArmModel, ExpFamilyArm, FluctuatingArm, PiecewiseLinearArm, PolyFamilyArm};
pub use cost::{CostAdjusted, CostParams};
pub use trace::{load_trace, read_trace, write_trace, TraceEnvironment, TraceError};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bandit::{arm_stream, ArmId, Environment, SimRng};

pub const DEFAULT_NOISE_SD: f64 = 0.1;

/// Closed-form arms observed through additive Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEnv {
    pub arms: Vec<ArmModel>,
    pub noise_sd: f64,
}

impl SyntheticEnv {
    pub fn new(arms: Vec<ArmModel>, noise_sd: f64) -> Self {
        assert!(noise_sd >= 0.0 && noise_sd.is_finite());
        Self { arms, noise_sd }
    }
}

impl Environment for SyntheticEnv {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn mean(&self, arm: ArmId, pull_index: u64) -> f64 {
        self.arms[arm.0].mean(pull_index)
    }

    fn sample(&self, arm: ArmId, pull_index: u64, rng: &mut SimRng) -> f64 {
        let mean = self.mean(arm, pull_index);
        if self.noise_sd == 0.0 {
            return mean;
        }
        let noise = Normal::new(0.0, self.noise_sd).expect("finite sd");
        mean + noise.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Exp,
    Poly,
}

/// Half-open sampling ranges `(lo, hi]` for random family parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyRanges {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub c: (f64, f64),
    pub rho: (f64, f64),
}

impl Default for FamilyRanges {
    fn default() -> Self {
        Self {
            a: (0.0, 1.0),
            b: (0.0, 10.0),
            c: (0.0, 1.0),
            rho: (0.0, 1.0),
        }
    }
}

fn draw(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    // 1 - u lies in (0, 1], so the draw never hits the lower bound
    let u: f64 = rng.random();
    lo + (hi - lo) * (1.0 - u)
}

/// Draw the parameters of arm `arm` from substream `arm` of `seed`.
pub fn sample_arm(kind: FamilyKind, seed: u64, arm: ArmId, ranges: &FamilyRanges) -> ArmModel {
    let mut rng = arm_stream(seed, arm);
    match kind {
        FamilyKind::Exp => ArmModel::Exp(ExpFamilyArm {
            a: draw(&mut rng, ranges.a),
            c: draw(&mut rng, ranges.c),
        }),
        FamilyKind::Poly => ArmModel::Poly(PolyFamilyArm {
            b: draw(&mut rng, ranges.b),
            c: draw(&mut rng, ranges.c),
            rho: draw(&mut rng, ranges.rho),
        }),
    }
}

/// Draw `k` arms of one family.
pub fn sample_family(kind: FamilyKind, k: usize, seed: u64, ranges: &FamilyRanges) -> Vec<ArmModel> {
    (0..k).map(|i| sample_arm(kind, seed, ArmId(i), ranges)).collect()
}
