use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// `c (1 − e^{−a n})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFamilyArm {
    pub a: f64,
    pub c: f64,
}

impl ExpFamilyArm {
    pub fn mean(&self, n: u64) -> f64 {
        self.c * (1.0 - (-self.a * n as f64).exp())
    }
}

/// `c (1 − b (n + b^{1/ρ})^{−ρ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyFamilyArm {
    pub b: f64,
    pub c: f64,
    pub rho: f64,
}

impl PolyFamilyArm {
    pub fn mean(&self, n: u64) -> f64 {
        if self.b == 0.0 {
            return self.c;
        }
        let shift = self.b.powf(1.0 / self.rho);
        self.c * (1.0 - self.b * (n as f64 + shift).powf(-self.rho))
    }
}

/// Linear growth up to the change point, then flat.
///
/// The plateau defaults to the line's value at `nu`, which keeps the mean
/// continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearArm {
    pub slope: f64,
    pub intercept: f64,
    pub nu: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau: Option<f64>,
}

impl PiecewiseLinearArm {
    pub fn continuous(slope: f64, intercept: f64, nu: u64) -> Self {
        Self {
            slope,
            intercept,
            nu,
            plateau: None,
        }
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
            .unwrap_or(self.slope * self.nu as f64 + self.intercept)
    }

    pub fn mean(&self, n: u64) -> f64 {
        if n < self.nu {
            self.slope * n as f64 + self.intercept
        } else {
            self.plateau()
        }
    }
}

/// A piecewise-linear trend with a sinusoidal ripple of period `period` pulls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuatingArm {
    pub base: PiecewiseLinearArm,
    pub amplitude: f64,
    pub period: f64,
}

impl FluctuatingArm {
    pub fn mean(&self, n: u64) -> f64 {
        self.base.mean(n) + self.amplitude * (TAU * n as f64 / self.period).sin()
    }
}

/// Any of the closed-form mean functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmModel {
    Exp(ExpFamilyArm),
    Poly(PolyFamilyArm),
    Piecewise(PiecewiseLinearArm),
    Fluctuating(FluctuatingArm),
    Constant { value: f64 },
}

impl ArmModel {
    pub fn mean(&self, n: u64) -> f64 {
        match self {
            ArmModel::Exp(m) => m.mean(n),
            ArmModel::Poly(m) => m.mean(n),
            ArmModel::Piecewise(m) => m.mean(n),
            ArmModel::Fluctuating(m) => m.mean(n),
            ArmModel::Constant { value } => *value,
        }
    }
}
