use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{mix_seed, run_episode, Detection, Environment};
use crate::regret::{expected_regret, greedy_allocation, min_gap, two_arm_optimum, GreedyAllocation};

use super::config::{BuiltEnv, ExperimentConfig, PolicySpec};
use super::HarnessError;

/// Maximum points per curve in `plot_data.json`.
pub const PLOT_POINTS: usize = 2000;

/// Replications held in memory at once.
const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub name: String,
    pub curve: CurveStats,
    pub final_mean: f64,
    pub final_stderr: f64,
    /// Per-arm pull counts averaged over replications.
    pub mean_counts: Vec<f64>,
    /// `(replication, detection)` pairs in replication order.
    pub detections: Vec<(u64, Detection)>,
    /// Per-replication regret curves, kept only on request.
    pub replications: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub environments: Vec<serde_json::Value>,
    pub policies: Vec<PolicyResult>,
    pub wall_clock: Duration,
}

impl RunResult {
    pub fn policy(&self, name: &str) -> Option<&PolicyResult> {
        self.policies.iter().find(|p| p.name == name)
    }
}

struct Replication {
    curves: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
    detections: Vec<Vec<Detection>>,
    env: Option<serde_json::Value>,
}

/// Running mean and squared deviations, updated in replication order.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    fn finish(self) -> CurveStats {
        let n = self.n as f64;
        let stderr = if self.n < 2 {
            vec![0.0; self.mean.len()]
        } else {
            self.m2.iter().map(|s| (s / (n - 1.0)).sqrt() / n.sqrt()).collect()
        };
        CurveStats {
            mean: self.mean,
            stderr,
        }
    }
}

fn replication_seeds(config: &ExperimentConfig) -> Vec<u64> {
    (0..config.replications as u64).map(|r| mix_seed(config.seed, r)).collect()
}

fn play(
    config: &ExperimentConfig,
    env: &BuiltEnv,
    greedy: &GreedyAllocation,
    seed: u64,
) -> Result<Replication, HarnessError> {
    let mut rep = Replication {
        curves: Vec::new(),
        counts: Vec::new(),
        detections: Vec::new(),
        env: None,
    };
    for spec in &config.policies {
        let mut policy = spec.build(env, config.horizon, config.reward_bounds)?;
        let samples = run_episode(env, policy.as_mut(), config.horizon, seed)?;
        let trace = expected_regret(env, greedy, &samples);
        rep.curves.push(trace.expected);
        rep.counts.push(trace.counts);
        rep.detections.push(policy.detections().to_vec());
    }
    Ok(rep)
}

/// Run every replication and aggregate, without touching the filesystem.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    let base = Path::new(".");
    let seeds = replication_seeds(config);
    let shared = if config.resample_per_run {
        None
    } else {
        let env = config.environment.build(config.seed, config.horizon, None, base)?;
        let greedy = greedy_allocation(&env, config.horizon);
        Some((env, greedy))
    };
    let num_arms = match &shared {
        Some((env, _)) => env.num_arms(),
        None => config.environment.build(config.seed, config.horizon, Some(0), base)?.num_arms(),
    };
    let resolved = config.resolved(num_arms);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Unsupported(format!("thread pool: {e}")))?;

    let t = config.horizon as usize;
    let p = config.policies.len();
    let mut stats: Vec<Welford> = (0..p).map(|_| Welford::new(t)).collect();
    let mut counts = vec![vec![0.0; num_arms]; p];
    let mut detections: Vec<Vec<(u64, Detection)>> = vec![Vec::new(); p];
    let mut kept: Vec<Vec<Vec<f64>>> = vec![Vec::new(); p];
    let mut environments = Vec::new();
    if let Some((env, _)) = &shared {
        environments.push(env.describe());
    }

    for (chunk_idx, chunk) in seeds.chunks(CHUNK).enumerate() {
        let outputs: Vec<Result<Replication, HarnessError>> = pool.install(|| {
            chunk
                .par_iter()
                .enumerate()
                .map(|(j, &seed)| {
                    let r = (chunk_idx * CHUNK + j) as u64;
                    match &shared {
                        Some((env, greedy)) => play(&resolved, env, greedy, seed),
                        None => {
                            let env = resolved.environment.build(config.seed, config.horizon, Some(r), base)?;
                            let greedy = greedy_allocation(&env, config.horizon);
                            let mut rep = play(&resolved, &env, &greedy, seed)?;
                            rep.env = Some(env.describe());
                            Ok(rep)
                        }
                    }
                })
                .collect()
        });
        for (j, out) in outputs.into_iter().enumerate() {
            let rep = out?;
            let r = (chunk_idx * CHUNK + j) as u64;
            for i in 0..p {
                stats[i].push(&rep.curves[i]);
                for (c, &n) in counts[i].iter_mut().zip(&rep.counts[i]) {
                    *c += n as f64;
                }
                detections[i].extend(rep.detections[i].iter().map(|d| (r, *d)));
            }
            if let Some(desc) = rep.env {
                environments.push(desc);
            }
            if config.keep_replications {
                for (i, curve) in rep.curves.into_iter().enumerate() {
                    kept[i].push(curve);
                }
            }
        }
    }

    let reps = config.replications as f64;
    let policies = stats
        .into_iter()
        .zip(config.policies.iter())
        .enumerate()
        .map(|(i, (w, spec))| {
            let curve = w.finish();
            PolicyResult {
                name: spec.label(),
                final_mean: curve.mean.last().copied().unwrap_or(0.0),
                final_stderr: curve.stderr.last().copied().unwrap_or(0.0),
                curve,
                mean_counts: counts[i].iter().map(|c| c / reps).collect(),
                detections: std::mem::take(&mut detections[i]),
                replications: config.keep_replications.then(|| std::mem::take(&mut kept[i])),
            }
        })
        .collect();

    Ok(RunResult {
        config: resolved,
        seeds,
        environments,
        policies,
        wall_clock: start.elapsed(),
    })
}

/// Evenly spaced indices into a curve of length `len`, always including the
/// last point, at most `max_points` of them.
pub fn downsample_indices(len: usize, max_points: usize) -> Vec<usize> {
    if len == 0 || max_points == 0 {
        return Vec::new();
    }
    let m = len.min(max_points);
    if m == 1 {
        return vec![len - 1];
    }
    (0..m)
        .map(|j| (j as u128 * (len as u128 - 1) / (m as u128 - 1)) as usize)
        .collect()
}

fn write_outputs(result: &RunResult, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;

    let mut curves = csv::Writer::from_path(dir.join("regret_curves.csv"))?;
    curves.write_record(["step", "policy", "mean_regret", "stderr"])?;
    for p in &result.policies {
        for (t, (m, s)) in p.curve.mean.iter().zip(&p.curve.stderr).enumerate() {
            curves.write_record([(t + 1).to_string(), p.name.clone(), m.to_string(), s.to_string()])?;
        }
    }
    curves.flush()?;

    let mut det = csv::Writer::from_path(dir.join("detections.csv"))?;
    det.write_record(["policy", "replication", "arm", "step"])?;
    for p in &result.policies {
        for (r, d) in &p.detections {
            det.write_record([p.name.clone(), r.to_string(), d.arm.0.to_string(), d.step.to_string()])?;
        }
    }
    det.flush()?;

    let summary: Vec<serde_json::Value> = result
        .policies
        .iter()
        .map(|p| {
            serde_json::json!({
                "policy": p.name,
                "final_mean_regret": p.final_mean,
                "final_stderr": p.final_stderr,
                "mean_counts": p.mean_counts,
                "detections": p.detections.len(),
            })
        })
        .collect();
    let manifest = serde_json::json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": result.config,
        "replication_seeds": result.seeds,
        "environments": result.environments,
        "summary": summary,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;

    if result.config.plot_data {
        let mut plot = serde_json::Map::new();
        for p in &result.policies {
            let idx = downsample_indices(p.curve.mean.len(), PLOT_POINTS);
            plot.insert(
                p.name.clone(),
                serde_json::json!({
                    "step": idx.iter().map(|&i| i + 1).collect::<Vec<_>>(),
                    "mean_regret": idx.iter().map(|&i| p.curve.mean[i]).collect::<Vec<_>>(),
                    "stderr": idx.iter().map(|&i| p.curve.stderr[i]).collect::<Vec<_>>(),
                }),
            );
        }
        write_json(&dir.join("plot_data.json"), &serde_json::Value::Object(plot))?;
    }

    if result.config.keep_replications {
        let mut reps = csv::Writer::from_path(dir.join("replications.csv"))?;
        reps.write_record(["policy", "replication", "step", "regret"])?;
        for p in &result.policies {
            for (r, curve) in p.replications.iter().flatten().enumerate() {
                for (t, x) in curve.iter().enumerate() {
                    reps.write_record([p.name.clone(), r.to_string(), (t + 1).to_string(), x.to_string()])?;
                }
            }
        }
        reps.flush()?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), HarnessError> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Run the experiment and write its result files to `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    let result = run_in_memory(config)?;
    write_outputs(&result, &config.output_dir)?;
    log::info!(
        "{} replications of {} steps in {:.2?}",
        config.replications,
        config.horizon,
        result.wall_clock
    );
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega: usize,
    pub mean_final_regret: f64,
    pub stderr: f64,
}

/// Run the first TI-UCB policy of `config` once per window size. Each run
/// goes to `omega_<w>/` under the output directory; the table goes to
/// `sweep.csv`.
pub fn sweep_window(config: &ExperimentConfig, omegas: &[usize]) -> Result<Vec<SweepRow>, HarnessError> {
    let Some(base) = config.policies.iter().find(|p| p.is_ti_ucb()) else {
        return Err(HarnessError::Invalid(vec!["policies: a sweep needs a ti-ucb policy".into()]));
    };
    if omegas.is_empty() || omegas.contains(&0) {
        return Err(HarnessError::Invalid(vec!["sweep.omegas: need at least one window, each at least 1".into()]));
    }
    let mut rows = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let PolicySpec::TiUcb {
            name,
            delta,
            gamma,
            exploration_scale,
            ..
        } = base.clone()
        else {
            unreachable!()
        };
        let single = ExperimentConfig {
            policies: vec![PolicySpec::TiUcb {
                name,
                delta,
                omega: Some(omega),
                gamma,
                exploration_scale,
            }],
            output_dir: config.output_dir.join(format!("omega_{omega}")),
            sweep: None,
            ..config.clone()
        };
        let result = run(&single)?;
        let p = &result.policies[0];
        rows.push(SweepRow {
            omega,
            mean_final_regret: p.final_mean,
            stderr: p.final_stderr,
        });
    }
    fs::create_dir_all(&config.output_dir)?;
    let mut w = csv::Writer::from_path(config.output_dir.join("sweep.csv"))?;
    w.write_record(["omega", "mean_final_regret", "stderr"])?;
    for r in &rows {
        w.write_record([r.omega.to_string(), r.mean_final_regret.to_string(), r.stderr.to_string()])?;
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub horizon: u64,
    pub counts: Vec<u64>,
    pub total: f64,
    /// `None` when there is a single arm.
    pub min_gap: Option<f64>,
    /// Best split `(pulls of arm 0, total)` over all sequences; two arms only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_arm_optimum: Option<(u64, f64)>,
}

/// Greedy benchmark for the configured environment.
pub fn oracle(config: &ExperimentConfig) -> Result<OracleReport, HarnessError> {
    config.validate()?;
    let env = config.environment.build(config.seed, config.horizon, None, Path::new("."))?;
    if !env.has_known_means() {
        return Err(HarnessError::Unsupported(
            "oracle needs known means; supply per-pull estimates for a trace environment".into(),
        ));
    }
    let g = greedy_allocation(&env, config.horizon);
    let gap = min_gap(&env, config.horizon);
    Ok(OracleReport {
        horizon: config.horizon,
        counts: g.counts,
        total: g.total,
        min_gap: gap.is_finite().then_some(gap),
        two_arm_optimum: (env.num_arms() == 2).then(|| two_arm_optimum(&env, config.horizon)),
    })
}
