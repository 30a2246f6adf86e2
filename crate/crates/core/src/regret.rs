//! Greedy benchmark allocation and regret accounting.
//!
//! The benchmark sequence takes, at every step, the arm whose next pull has
//! the highest mean. It is not the global optimum in general, so regret
//! against it can be negative.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{ArmId, Environment, RewardSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyAllocation {
    pub counts: Vec<u64>,
    pub total: f64,
    pub sequence: Vec<ArmId>,
    /// Cumulative greedy mean reward after each step.
    pub cumulative: Vec<f64>,
}

pub fn greedy_allocation<E: Environment + ?Sized>(env: &E, horizon: u64) -> GreedyAllocation {
    let k = env.num_arms();
    let mut counts = vec![0u64; k];
    let mut sequence = Vec::with_capacity(horizon as usize);
    let mut cumulative = Vec::with_capacity(horizon as usize);
    let mut total = 0.0;
    for _ in 0..horizon {
        let mut best = 0;
        let mut best_mean = f64::NEG_INFINITY;
        for (i, &n) in counts.iter().enumerate() {
            if env.pull_limit(ArmId(i)).is_some_and(|l| n >= l) {
                continue;
            }
            let m = env.mean(ArmId(i), n + 1);
            if m > best_mean {
                best = i;
                best_mean = m;
            }
        }
        counts[best] += 1;
        total += best_mean;
        sequence.push(ArmId(best));
        cumulative.push(total);
    }
    GreedyAllocation {
        counts,
        total,
        sequence,
        cumulative,
    }
}

/// Smallest gap between the greedy choice and any other arm along the greedy
/// trajectory. Infinite for a single arm.
pub fn min_gap<E: Environment + ?Sized>(env: &E, horizon: u64) -> f64 {
    let k = env.num_arms();
    let mut counts = vec![0u64; k];
    let mut gap = f64::INFINITY;
    for _ in 0..horizon {
        let next: Vec<f64> = (0..k).map(|i| env.mean(ArmId(i), counts[i] + 1)).collect();
        let best = crate::baselines::argmax(next.iter().copied());
        for (i, m) in next.iter().enumerate() {
            if i != best.0 {
                gap = gap.min(next[best.0] - m);
            }
        }
        counts[best.0] += 1;
    }
    gap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    /// Cumulative expected regret after each step.
    pub expected: Vec<f64>,
    /// Final per-arm pull counts of the run.
    pub counts: Vec<u64>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.expected.last().copied().unwrap_or(0.0)
    }
}

/// Per-step cumulative regret of a run against a precomputed greedy allocation.
pub fn expected_regret<E: Environment + ?Sized>(
    env: &E,
    greedy: &GreedyAllocation,
    samples: &[RewardSample],
) -> RegretTrace {
    let mut counts = vec![0u64; env.num_arms()];
    let mut earned = 0.0;
    let expected = samples
        .iter()
        .zip(&greedy.cumulative)
        .map(|(s, g)| {
            counts[s.arm.0] += 1;
            earned += env.mean(s.arm, counts[s.arm.0]);
            g - earned
        })
        .collect();
    RegretTrace { expected, counts }
}

#[derive(Debug, Error, PartialEq)]
pub enum RegretError {
    #[error("no estimate for arm {arm} at pull {pull_index}")]
    Coverage { arm: usize, pull_index: u64 },
    #[error("expected {expected} arms, got {got}")]
    ArmCount { expected: usize, got: usize },
}

/// `Σ_i [Σ_{s ≤ n*_i} μ̂_{i,s} − Σ_{s ≤ n_i} μ̂_{i,s}]` where `estimates[i][s-1]`
/// holds `μ̂_{i,s}`.
pub fn empirical_regret(
    estimates: &[Vec<f64>],
    greedy_counts: &[u64],
    run_counts: &[u64],
) -> Result<f64, RegretError> {
    if greedy_counts.len() != estimates.len() || run_counts.len() != estimates.len() {
        return Err(RegretError::ArmCount {
            expected: estimates.len(),
            got: greedy_counts.len().min(run_counts.len()),
        });
    }
    let mut regret = 0.0;
    for (arm, est) in estimates.iter().enumerate() {
        let need = greedy_counts[arm].max(run_counts[arm]);
        if need > est.len() as u64 {
            return Err(RegretError::Coverage {
                arm,
                pull_index: est.len() as u64 + 1,
            });
        }
        let opt: f64 = est[..greedy_counts[arm] as usize].iter().sum();
        let got: f64 = est[..run_counts[arm] as usize].iter().sum();
        regret += opt - got;
    }
    Ok(regret)
}

/// Best total mean over every pull sequence of a two-arm environment.
///
/// With rested arms only the split matters, so this scans `n_0 = 0..=T`.
pub fn two_arm_optimum<E: Environment + ?Sized>(env: &E, horizon: u64) -> (u64, f64) {
    assert_eq!(env.num_arms(), 2);
    let prefix = |arm: usize| -> Vec<f64> {
        let mut acc = vec![0.0];
        for n in 1..=horizon {
            acc.push(acc[n as usize - 1] + env.mean(ArmId(arm), n));
        }
        acc
    };
    let (p0, p1) = (prefix(0), prefix(1));
    (0..=horizon)
        .map(|n0| (n0, p0[n0 as usize] + p1[(horizon - n0) as usize]))
        .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{run_episode, SimRng};
    use crate::baselines::GreedyOracle;
    use approx::assert_abs_diff_eq;

    struct Table(Vec<Vec<f64>>);

    impl Environment for Table {
        fn num_arms(&self) -> usize {
            self.0.len()
        }
        fn mean(&self, arm: ArmId, n: u64) -> f64 {
            let seq = &self.0[arm.0];
            seq[(n as usize - 1).min(seq.len() - 1)]
        }
        fn sample(&self, arm: ArmId, n: u64, _rng: &mut SimRng) -> f64 {
            self.mean(arm, n)
        }
    }

    fn late_bloomer() -> Table {
        Table(vec![vec![0.5], vec![0.1, 0.9]])
    }

    #[test]
    fn greedy_ignores_late_bloomer() {
        let g = greedy_allocation(&late_bloomer(), 4);
        assert_eq!(g.counts, vec![4, 0]);
        assert_abs_diff_eq!(g.total, 2.0, epsilon = 1e-12);
        let (n0, best) = two_arm_optimum(&late_bloomer(), 4);
        assert_eq!(n0, 0);
        assert_abs_diff_eq!(best, 2.8, epsilon = 1e-12);
    }

    #[test]
    fn single_arm_and_ties() {
        assert_eq!(greedy_allocation(&Table(vec![vec![0.3]]), 7).counts, vec![7]);
        assert_eq!(greedy_allocation(&Table(vec![vec![0.3], vec![0.3]]), 7).counts, vec![7, 0]);
        assert_eq!(min_gap(&Table(vec![vec![0.3]]), 5), f64::INFINITY);
        assert_eq!(min_gap(&Table(vec![vec![0.3], vec![0.3]]), 5), 0.0);
        assert_abs_diff_eq!(min_gap(&Table(vec![vec![0.9], vec![0.1]]), 5), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn negative_regret_for_late_bloomer() {
        let env = late_bloomer();
        let g = greedy_allocation(&env, 4);
        let mut p = GreedyOracle::new(2, vec![ArmId(1); 4]);
        let samples = run_episode(&env, &mut p, 4, 0).unwrap();
        let r = expected_regret(&env, &g, &samples);
        assert_abs_diff_eq!(r.final_regret(), -0.8, epsilon = 1e-12);
        assert_eq!(r.counts, vec![0, 4]);
    }

    #[test]
    fn greedy_policy_has_zero_regret() {
        let env = Table(vec![vec![0.2, 0.4, 0.6, 0.6], vec![0.5, 0.5, 0.1]]);
        let g = greedy_allocation(&env, 9);
        let mut p = GreedyOracle::from_env(&env, 9);
        let samples = run_episode(&env, &mut p, 9, 0).unwrap();
        assert!(expected_regret(&env, &g, &samples).expected.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn empirical_regret_cases() {
        let est = vec![vec![0.5; 4], vec![0.1, 0.9, 0.9, 0.9]];
        assert_eq!(empirical_regret(&est, &[4, 0], &[4, 0]).unwrap(), 0.0);
        assert_abs_diff_eq!(empirical_regret(&est, &[4, 0], &[1, 3]).unwrap(), 1.5 - 1.9, epsilon = 1e-12);
        let dominated = vec![vec![0.9; 4], vec![0.2; 4]];
        assert_abs_diff_eq!(empirical_regret(&dominated, &[4, 0], &[2, 2]).unwrap(), 1.4, epsilon = 1e-12);
        let scaled: Vec<Vec<f64>> = dominated.iter().map(|v| v.iter().map(|x| 2.5 * x).collect()).collect();
        assert_abs_diff_eq!(empirical_regret(&scaled, &[4, 0], &[2, 2]).unwrap(), 3.5, epsilon = 1e-12);
        assert_eq!(
            empirical_regret(&[vec![0.1; 2], vec![0.1; 2]], &[2, 0], &[0, 3]),
            Err(RegretError::Coverage { arm: 1, pull_index: 3 })
        );
    }
}
