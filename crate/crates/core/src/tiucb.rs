//! Trend-predicting UCB with two-window change detection (TI-UCB).
//!
//! Each arm's index is the least-squares next-pull prediction over the
//! observations since its last reset plus a confidence bonus. After every
//! pull the chosen arm's two most recent length-ω windows are extrapolated to
//! the next pull; when they disagree by more than γ/2 the arm's log is
//! restarted from the newest observation.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{ArmId, ArmState, Detection, Policy, RewardSample, SimRng};
use crate::estimator::windowed_predictions;

pub const DEFAULT_OMEGA: usize = 100;
pub const DEFAULT_GAMMA: f64 = 0.3;
pub const DEFAULT_EXPLORATION_SCALE: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("window size must be at least 1, got {0}")]
    Omega(usize),
    #[error("gamma must be positive and finite, got {0}")]
    Gamma(f64),
    #[error("exploration scale must be positive and finite, got {0}")]
    ExplorationScale(f64),
    #[error("need at least one arm")]
    NoArms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiUcbParams {
    pub delta: f64,
    pub omega: usize,
    pub gamma: f64,
    pub exploration_scale: f64,
}

impl TiUcbParams {
    /// Defaults for horizon `T`: δ = 1/T, ω = 100, γ = 0.3, scale 16.
    pub fn for_horizon(horizon: u64) -> Self {
        Self {
            delta: 1.0 / horizon.max(2) as f64,
            omega: DEFAULT_OMEGA,
            gamma: DEFAULT_GAMMA,
            exploration_scale: DEFAULT_EXPLORATION_SCALE,
        }
    }

    /// Check ranges. `ω = 1` is accepted: single-point windows predict their
    /// own value.
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ParamError::Delta(self.delta));
        }
        if self.omega < 1 {
            return Err(ParamError::Omega(self.omega));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(ParamError::Gamma(self.gamma));
        }
        if !(self.exploration_scale > 0.0 && self.exploration_scale.is_finite()) {
            return Err(ParamError::ExplorationScale(self.exploration_scale));
        }
        Ok(())
    }

    /// True when γ is above the admissible detection bound for (ω, δ).
    pub fn gamma_exceeds_bound(&self) -> bool {
        self.omega >= 2 && self.gamma > default_gamma(self.omega, self.delta)
    }

    pub fn bonus(&self, pulls: u64) -> f64 {
        exploration_bonus(pulls, self.delta, self.exploration_scale)
    }
}

/// `scale * sqrt(2 ln(1/δ) / n)`.
pub fn exploration_bonus(pulls: u64, delta: f64, scale: f64) -> f64 {
    scale * (2.0 * (1.0 / delta).ln() / pulls as f64).sqrt()
}

/// Largest detection threshold admitted for window `omega` at confidence
/// `delta`: `sqrt((2/ω) (14 + 12/|ω−1|)² ln(2/δ))`.
pub fn default_gamma(omega: usize, delta: f64) -> f64 {
    debug_assert!(omega >= 2 && delta > 0.0 && delta < 1.0);
    let w = omega as f64;
    let c = 14.0 + 12.0 / (w - 1.0).abs();
    (2.0 / w * c * c * (2.0 / delta).ln()).sqrt()
}

/// UCB index of one arm.
///
/// `+∞` before the first pull; with one observation the value itself stands
/// in for the prediction.
pub fn ucb_index(arm: &ArmState, params: &TiUcbParams) -> f64 {
    let n = arm.pulls_since_reset();
    if n == 0 {
        return f64::INFINITY;
    }
    let prediction = match arm.trend_prediction() {
        Some(p) => p,
        None => arm.last().unwrap_or(0.0),
    };
    prediction + params.bonus(n)
}

/// Next-pull predictions of the two detection windows, or `None` while the
/// arm has fewer than `2ω` observations.
pub fn window_gap(values: &[f64], omega: usize) -> Option<(f64, f64)> {
    if values.len() < 2 * omega {
        return None;
    }
    if omega == 1 {
        let n = values.len();
        return Some((values[n - 2], values[n - 1]));
    }
    windowed_predictions(values, omega).ok()
}

#[derive(Debug, Clone)]
pub struct TiUcb {
    params: TiUcbParams,
    arms: Vec<ArmState>,
    detections: Vec<Detection>,
    name: String,
}

impl TiUcb {
    pub fn new(num_arms: usize, params: TiUcbParams) -> Result<Self, ParamError> {
        if num_arms == 0 {
            return Err(ParamError::NoArms);
        }
        params.validate()?;
        if params.gamma_exceeds_bound() {
            warn!(
                "gamma {} exceeds the detection bound {:.4} for omega {} and delta {}",
                params.gamma,
                default_gamma(params.omega, params.delta),
                params.omega,
                params.delta
            );
        }
        Ok(Self {
            params,
            arms: vec![ArmState::new(); num_arms],
            detections: Vec::new(),
            name: "TI-UCB".to_string(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn params(&self) -> &TiUcbParams {
        &self.params
    }

    pub fn arm(&self, arm: ArmId) -> &ArmState {
        &self.arms[arm.index()]
    }

    pub fn index(&self, arm: ArmId) -> f64 {
        ucb_index(&self.arms[arm.index()], &self.params)
    }

    /// Argmax of the indices; the lowest arm wins ties.
    pub fn best_arm(&self) -> ArmId {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, st) in self.arms.iter().enumerate() {
            let v = ucb_index(st, &self.params);
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        ArmId(best)
    }

    /// Record `sample` and run change detection on its arm.
    pub fn observe_and_detect(&mut self, sample: &RewardSample) -> Option<Detection> {
        let omega = self.params.omega;
        let threshold = self.params.gamma / 2.0;
        let state = &mut self.arms[sample.arm.index()];
        state.push(sample.value);
        let (w1, w2) = window_gap(state.values(), omega)?;
        if (w1 - w2).abs() > threshold {
            state.reset_keep_last(sample.global_step);
            let d = Detection {
                arm: sample.arm,
                step: sample.global_step,
            };
            self.detections.push(d);
            Some(d)
        } else {
            None
        }
    }
}

impl Policy for TiUcb {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, _step: u64, _rng: &mut SimRng) -> ArmId {
        self.best_arm()
    }

    fn observe(&mut self, sample: &RewardSample, _rng: &mut SimRng) {
        self.observe_and_detect(sample);
    }

    fn reset(&mut self) {
        self.arms.iter_mut().for_each(ArmState::clear);
        self.detections.clear();
    }

    fn detections(&self) -> &[Detection] {
        &self.detections
    }
}
