use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rested_core::bandit::{arm_stream, run_episode, ArmId, ArmState, Environment, SimRng};
use rested_core::baselines::{bernoulli_kl, kl_ucb_index};
use rested_core::env::{ArmModel, PiecewiseLinearArm, SyntheticEnv};
use rested_core::estimator::{fit, predict_next, windowed_predictions};
use rested_core::regret::{expected_regret, greedy_allocation, min_gap};
use rested_core::tiucb::{default_gamma, ucb_index, window_gap, TiUcbParams};
use rested_core::{Policy, TiUcb};

/// Solve the 2×2 normal equations `[n Σs; Σs Σs²][b; a] = [Σy; Σsy]` by
/// Cramer's rule.
fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (mut s, mut ss, mut y, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, v) in points {
        s += x;
        ss += x * x;
        y += v;
        sy += x * v;
    }
    let det = n * ss - s * s;
    let slope = (n * sy - s * y) / det;
    let intercept = (ss * y - s * sy) / det;
    (slope, intercept)
}

fn extrapolate(points: &[(f64, f64)], at: f64) -> f64 {
    let (a, b) = normal_equations(points);
    a * at + b
}

#[test]
fn fit_matches_normal_equations() {
    let mut rng = SimRng::seed_from_u64(11);
    let points: Vec<(f64, f64)> = (1..=50)
        .map(|s| (s as f64, 0.02 * s as f64 + 0.1 + rng.random_range(-0.05..0.05)))
        .collect();
    let f = fit(points.iter().copied()).unwrap();
    let (a, b) = normal_equations(&points);
    assert_abs_diff_eq!(f.slope, a, epsilon = 1e-9);
    assert_abs_diff_eq!(f.intercept, b, epsilon = 1e-9);
}

#[test]
fn four_point_prediction() {
    let xs = [0.1, 0.4, 0.2, 0.5];
    let points: Vec<(f64, f64)> = xs.iter().enumerate().map(|(i, &x)| (i as f64 + 1.0, x)).collect();
    let oracle = extrapolate(&points, 5.0);
    assert_abs_diff_eq!(predict_next(&xs).unwrap(), oracle, epsilon = 1e-12);
    // weights (1/4)[1 + 6(s − 2.5)/3]
    let weighted: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| 0.25 * (1.0 + 2.0 * (i as f64 + 1.0 - 2.5)) * x)
        .sum();
    assert_abs_diff_eq!(predict_next(&xs).unwrap(), weighted, epsilon = 1e-12);
}

#[test]
fn windows_match_per_window_oracle() {
    let mut rng = SimRng::seed_from_u64(12);
    for _ in 0..200 {
        let omega = 3;
        let n = rng.random_range(6..40usize);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let window = |lo: usize| -> Vec<(f64, f64)> { (lo..lo + omega).map(|s| (s as f64, xs[s - 1])).collect() };
        let w1 = extrapolate(&window(n - 2 * omega + 1), n as f64 + 1.0);
        let w2 = extrapolate(&window(n - omega + 1), n as f64 + 1.0);
        let (m1, m2) = windowed_predictions(&xs, omega).unwrap();
        assert_abs_diff_eq!(m1, w1, epsilon = 1e-9);
        assert_abs_diff_eq!(m2, w2, epsilon = 1e-9);
    }
}

#[test]
fn newer_window_weights_use_omega_minus_one() {
    // 1/ω + 6(s − s̄)/(ω(ω − 1)) over the newest window
    let mut rng = SimRng::seed_from_u64(13);
    for omega in 2..=40usize {
        let n = 2 * omega + rng.random_range(0..30);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = omega as f64;
        let sbar = (2 * n - omega + 1) as f64 / 2.0;
        let direct: f64 = (n - omega + 1..=n)
            .map(|s| (1.0 / w + 6.0 * (s as f64 - sbar) / (w * (w - 1.0))) * xs[s - 1])
            .sum();
        assert_abs_diff_eq!(windowed_predictions(&xs, omega).unwrap().1, direct, epsilon = 1e-9);
    }
}

#[test]
fn ucb_index_with_hand_bonus() {
    let mut rng = SimRng::seed_from_u64(14);
    let mut arm = ArmState::new();
    let xs: Vec<f64> = (1..=100).map(|s| 0.003 * s as f64 + rng.random_range(-0.1..0.1)).collect();
    for &x in &xs {
        arm.push(x);
    }
    let params = TiUcbParams {
        delta: 0.01,
        omega: 100,
        gamma: 0.3,
        exploration_scale: 16.0,
    };
    let bonus = 16.0 * (2.0 * 100f64.ln() / 100.0).sqrt();
    assert_abs_diff_eq!(ucb_index(&arm, &params), predict_next(&xs).unwrap() + bonus, epsilon = 1e-9);

    let mut line = ArmState::new();
    line.push(0.3);
    line.push(0.5);
    let unit = TiUcbParams {
        delta: (-1.0f64).exp(),
        ..params
    };
    assert_abs_diff_eq!(ucb_index(&line, &unit), 0.7 + 16.0, epsilon = 1e-12);
}

#[test]
fn default_gamma_direct_and_monotone() {
    let direct = ((2.0 / 100.0) * (14.0 + 12.0 / 99.0f64).powi(2) * 200f64.ln()).sqrt();
    assert_abs_diff_eq!(default_gamma(100, 0.01), direct, epsilon = 1e-12);
    let mut prev = f64::INFINITY;
    for omega in (2..=1024).step_by(2) {
        let g = default_gamma(omega, 0.01);
        assert!(g < prev);
        prev = g;
    }
}

#[test]
fn kl_index_matches_grid_search() {
    let mut rng = SimRng::seed_from_u64(15);
    for _ in 0..20 {
        let mean = rng.random_range(0.0..0.99);
        let n = rng.random_range(1..500u64);
        let t = rng.random_range(3..100_000u64);
        let c = 3.0;
        let lt = (t as f64).ln();
        let level = (lt + c * lt.ln()).max(0.0) / n as f64;
        let grid = 1_000_000;
        let mut best = mean;
        for j in 0..=grid {
            let q = mean + (1.0 - mean) * j as f64 / grid as f64;
            if bernoulli_kl(mean, q) <= level {
                best = q;
            }
        }
        assert_abs_diff_eq!(kl_ucb_index(mean, n, t, c), best, epsilon = 1e-5);
    }
}

#[test]
fn flat_arm_false_alarm_rate() {
    // [0,1]-bounded noise around a constant, one window comparison per trial
    for &(omega, delta) in &[(10usize, 0.05), (50, 0.01)] {
        let gamma = default_gamma(omega, delta);
        let mut rng = SimRng::seed_from_u64(16 + omega as u64);
        let trials = 10_000;
        let mut alarms = 0;
        for _ in 0..trials {
            let xs: Vec<f64> = (0..2 * omega).map(|_| rng.random_range(0.0..=1.0)).collect();
            let (a, b) = window_gap(&xs, omega).unwrap();
            if (a - b).abs() > gamma / 2.0 {
                alarms += 1;
            }
        }
        assert!(alarms as f64 / trials as f64 <= delta, "ω={omega}: {alarms}");
    }
}

#[test]
fn min_gap_matches_scan() {
    let env = SyntheticEnv::new(
        vec![
            ArmModel::Piecewise(PiecewiseLinearArm::continuous(0.02, 0.1, 20)),
            ArmModel::Piecewise(PiecewiseLinearArm::continuous(0.01, 0.3, 40)),
        ],
        0.0,
    );
    let horizon = 120;
    let greedy = greedy_allocation(&env, horizon);
    let mut n = [0u64; 2];
    let mut gap = f64::INFINITY;
    for arm in &greedy.sequence {
        let next = [env.mean(ArmId(0), n[0] + 1), env.mean(ArmId(1), n[1] + 1)];
        gap = gap.min((next[arm.0] - next[1 - arm.0]).abs());
        n[arm.0] += 1;
    }
    assert_abs_diff_eq!(min_gap(&env, horizon), gap, epsilon = 1e-12);
}

#[test]
fn regret_matches_brute_force_recount() {
    let mut rng = SimRng::seed_from_u64(17);
    for _ in 0..100 {
        let horizon = rng.random_range(1..=6u64);
        let arms: Vec<ArmModel> = (0..2)
            .map(|_| ArmModel::Piecewise(PiecewiseLinearArm::continuous(rng.random_range(0.0..0.3), rng.random_range(0.0..0.5), rng.random_range(1..6))))
            .collect();
        let env = SyntheticEnv::new(arms, 0.1);
        let mut policy = TiUcb::new(2, TiUcbParams::for_horizon(horizon)).unwrap();
        let samples = run_episode(&env, &mut policy, horizon, rng.random()).unwrap();
        let greedy = greedy_allocation(&env, horizon);
        let trace = expected_regret(&env, &greedy, &samples);

        let sum_first = |arm: usize, k: u64| (1..=k).map(|s| env.mean(ArmId(arm), s)).sum::<f64>();
        let mut run_counts = [0u64; 2];
        for s in &samples {
            run_counts[s.arm.0] += 1;
        }
        let want: f64 = (0..2)
            .map(|i| sum_first(i, greedy.counts[i]) - sum_first(i, run_counts[i]))
            .sum();
        assert_abs_diff_eq!(trace.final_regret(), want, epsilon = 1e-12);
        assert_eq!(trace.expected.len() as u64, horizon);
    }
}

#[test]
fn regret_is_additive_over_segments() {
    let env = SyntheticEnv::new(
        vec![
            ArmModel::Piecewise(PiecewiseLinearArm::continuous(0.01, 0.0, 30)),
            ArmModel::Constant { value: 0.2 },
        ],
        0.1,
    );
    let horizon = 200;
    let mut policy = TiUcb::new(2, TiUcbParams::for_horizon(horizon)).unwrap();
    let samples = run_episode(&env, &mut policy, horizon, 5).unwrap();
    let greedy = greedy_allocation(&env, horizon);
    let r = expected_regret(&env, &greedy, &samples).expected;
    // increments over [1, 80] and (80, 200] add up to the total
    let first = r[79];
    let second = r[199] - r[79];
    assert_abs_diff_eq!(first + second, r[199], epsilon = 1e-12);
}

#[test]
fn rested_streams_ignore_other_arms() {
    let env = SyntheticEnv::new(vec![ArmModel::Constant { value: 0.5 }, ArmModel::Constant { value: 0.2 }], 0.3);
    let mut a = arm_stream(9, ArmId(1));
    let direct: Vec<f64> = (1..=5).map(|n| env.sample(ArmId(1), n, &mut a)).collect();
    let mut p = TiUcb::new(2, TiUcbParams::for_horizon(50)).unwrap();
    let samples = run_episode(&env, &mut p, 50, 9).unwrap();
    let seen: Vec<f64> = samples.iter().filter(|s| s.arm == ArmId(1)).take(5).map(|s| s.value).collect();
    assert_eq!(seen, direct);
    assert_eq!(p.name(), "TI-UCB");
}
