//! Least-squares trend estimation over pull indices.
//!
//! Everything here is ordinary least squares with the pull index as the
//! abscissa, computed in centered form. The prediction helpers extrapolate the
//! fitted line one pull past the last observation.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("least-squares fit needs at least two distinct pull indices (got {points} points)")]
    Degenerate { points: usize },
    #[error("window of {omega} needs {needed} observations, have {have}")]
    InsufficientData { omega: usize, needed: usize, have: usize },
    #[error("window size must be at least 2, got {0}")]
    InvalidWindow(usize),
}

/// Fitted line `value ≈ slope * pull_index + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Number of points fitted.
    pub n: usize,
}

impl LinearFit {
    pub fn predict(&self, pull_index: f64) -> f64 {
        self.slope * pull_index + self.intercept
    }
}

/// The two adjacent change-detection windows ending at pull `n`.
///
/// `w1` covers pulls `[n - 2ω + 1, n - ω]`, `w2` covers `[n - ω + 1, n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowPair {
    pub omega: usize,
    pub n: usize,
}

impl WindowPair {
    pub fn new(n: usize, omega: usize) -> Result<Self, EstimatorError> {
        if omega < 2 {
            return Err(EstimatorError::InvalidWindow(omega));
        }
        if n < 2 * omega {
            return Err(EstimatorError::InsufficientData {
                omega,
                needed: 2 * omega,
                have: n,
            });
        }
        Ok(Self { omega, n })
    }

    /// Inclusive 1-based pull range of the older window.
    pub fn w1_range(&self) -> (usize, usize) {
        (self.n + 1 - 2 * self.omega, self.n - self.omega)
    }

    /// Inclusive 1-based pull range of the newer window.
    pub fn w2_range(&self) -> (usize, usize) {
        (self.n + 1 - self.omega, self.n)
    }
}

/// Ordinary least squares over `(pull_index, value)` pairs.
pub fn fit<I>(points: I) -> Result<LinearFit, EstimatorError>
where
    I: IntoIterator<Item = (f64, f64)>,
    I::IntoIter: Clone,
{
    let it = points.into_iter();
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for (x, y) in it.clone() {
        n += 1;
        sx += x;
        sy += y;
    }
    if n < 2 {
        return Err(EstimatorError::Degenerate { points: n });
    }
    let mean_x = sx / n as f64;
    let mean_y = sy / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in it {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(EstimatorError::Degenerate { points: n });
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: mean_y - slope * mean_x,
        n,
    })
}

/// Extrapolate the least-squares line over pulls `1..=n` to pull `n + 1`.
pub fn predict_next(values: &[f64]) -> Result<f64, EstimatorError> {
    if values.len() < 2 {
        return Err(EstimatorError::Degenerate { points: values.len() });
    }
    Ok(extrapolate_window(values, values.len()))
}

/// Next-pull predictions from the two change-detection windows.
///
/// `values[j]` is the observation at pull `j + 1`. Both windows are
/// extrapolated to pull `n + 1`; the older window extrapolates `ω + 1` steps
/// past its own end.
pub fn windowed_predictions(values: &[f64], omega: usize) -> Result<(f64, f64), EstimatorError> {
    let pair = WindowPair::new(values.len(), omega)?;
    let n = pair.n;
    let (l1, r1) = pair.w1_range();
    let (l2, r2) = pair.w2_range();
    let mu_w1 = extrapolate_window(&values[l1 - 1..r1], n + 1 - l1);
    let mu_w2 = extrapolate_window(&values[l2 - 1..r2], n + 1 - l2);
    Ok((mu_w1, mu_w2))
}

/// LSQ over `window` (offsets `0..len`) evaluated at offset `target`.
///
/// Centering uses the closed forms for consecutive integers.
fn extrapolate_window(window: &[f64], target: usize) -> f64 {
    let nf = window.len() as f64;
    let mean_y = window.iter().sum::<f64>() / nf;
    let center = (nf - 1.0) / 2.0;
    let sxx = nf * (nf * nf - 1.0) / 12.0;
    let sxy: f64 = window
        .iter()
        .enumerate()
        .map(|(j, &y)| (j as f64 - center) * (y - mean_y))
        .sum();
    mean_y + sxy / sxx * (target as f64 - center)
}

/// Plain average of the observations.
pub fn empirical_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
