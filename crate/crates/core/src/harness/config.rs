use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::{mix_seed, ArmId, Environment, Policy, SimRng};
use crate::baselines::{
    rexp3_batch, rexp3_gamma, BaselineParams, GreedyOracle, KlUcb, Rexp3, RewardScale, Ser4,
    SwKlUcb, SwTs, SwUcb,
};
use crate::env::{
    load_trace, read_trace, sample_arm, ArmModel, CostAdjusted, CostParams, FamilyKind, FamilyRanges,
    SyntheticEnv, TraceEnvironment, DEFAULT_NOISE_SD,
};
use crate::tiucb::{default_gamma, TiUcb, TiUcbParams};

use super::HarnessError;

const ENV_SALT: u64 = 0x656e_7669_726f_6e;

fn default_replications() -> usize {
    20
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_SD
}

/// One experiment, as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Reward range mapped onto [0, 1] for policies that need bounded rewards.
    #[serde(default)]
    pub reward_bounds: RewardScale,
    /// Redraw sampled environment parameters for every replication.
    #[serde(default)]
    pub resample_per_run: bool,
    #[serde(default)]
    pub plot_data: bool,
    /// Keep per-replication curves and write `replications.csv`.
    #[serde(default)]
    pub keep_replications: bool,
    pub environment: EnvSpec,
    pub policies: Vec<PolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub omegas: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    /// Arms drawn at random, one family per arm.
    Sampled {
        families: Vec<FamilyKind>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "default_noise")]
        noise_sd: f64,
        #[serde(default)]
        ranges: FamilyRanges,
    },
    /// Explicit arm models.
    Arms {
        arms: Vec<ArmModel>,
        #[serde(default = "default_noise")]
        noise_sd: f64,
    },
    Trace {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        estimates: Option<PathBuf>,
    },
    CostWrapped {
        inner: Box<EnvSpec>,
        cost: CostParams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    TiUcb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<usize>,
        /// A number, or the string "bound" for the largest admissible value.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<GammaSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exploration_scale: Option<f64>,
    },
    KlUcb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    SwUcb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        xi: Option<f64>,
    },
    SwTs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<usize>,
    },
    SwKlUcb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    Rexp3 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variation_budget: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        batch: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    Ser4 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<f64>,
    },
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Rule(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    Bound,
}

impl PolicySpec {
    pub fn ti_ucb() -> Self {
        PolicySpec::TiUcb {
            name: None,
            delta: None,
            omega: None,
            gamma: None,
            exploration_scale: None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PolicySpec::TiUcb { name, .. } => name.clone().unwrap_or_else(|| "TI-UCB".into()),
            PolicySpec::KlUcb { .. } => "KL-UCB".into(),
            PolicySpec::SwUcb { .. } => "SW-UCB".into(),
            PolicySpec::SwTs { .. } => "SW-TS".into(),
            PolicySpec::SwKlUcb { .. } => "SW-KL-UCB".into(),
            PolicySpec::Rexp3 { .. } => "Rexp3".into(),
            PolicySpec::Ser4 { .. } => "Ser4".into(),
            PolicySpec::Greedy => "Greedy".into(),
        }
    }

    pub fn is_ti_ucb(&self) -> bool {
        matches!(self, PolicySpec::TiUcb { .. })
    }

    /// Fill every unset parameter with its horizon-dependent default.
    pub fn resolve(&self, horizon: u64, num_arms: usize) -> PolicySpec {
        let base = BaselineParams::for_horizon(horizon, num_arms);
        match self {
            PolicySpec::TiUcb {
                name,
                delta,
                omega,
                gamma,
                exploration_scale,
            } => {
                let d = TiUcbParams::for_horizon(horizon);
                let delta = delta.unwrap_or(d.delta);
                let omega = omega.unwrap_or(d.omega);
                let gamma = match gamma {
                    None => d.gamma,
                    Some(GammaSpec::Value(g)) => *g,
                    Some(GammaSpec::Rule(GammaRule::Bound)) => default_gamma(omega, delta),
                };
                PolicySpec::TiUcb {
                    name: name.clone(),
                    delta: Some(delta),
                    omega: Some(omega),
                    gamma: Some(GammaSpec::Value(gamma)),
                    exploration_scale: Some(exploration_scale.unwrap_or(d.exploration_scale)),
                }
            }
            PolicySpec::KlUcb { c } => PolicySpec::KlUcb {
                c: Some(c.unwrap_or(base.kl_ucb_c)),
            },
            PolicySpec::SwUcb { tau, xi } => PolicySpec::SwUcb {
                tau: Some(tau.unwrap_or(base.sw_ucb_tau)),
                xi: Some(xi.unwrap_or(base.sw_ucb_xi)),
            },
            PolicySpec::SwTs { tau } => PolicySpec::SwTs {
                tau: Some(tau.unwrap_or(base.sw_ts_tau)),
            },
            PolicySpec::SwKlUcb { tau, c } => PolicySpec::SwKlUcb {
                tau: Some(tau.unwrap_or(base.sw_kl_ucb_tau)),
                c: Some(c.unwrap_or(base.kl_ucb_c)),
            },
            PolicySpec::Rexp3 {
                variation_budget,
                batch,
                gamma,
            } => {
                let v = variation_budget.unwrap_or(num_arms as f64);
                let batch = batch.unwrap_or_else(|| rexp3_batch(num_arms, horizon, v));
                PolicySpec::Rexp3 {
                    variation_budget: Some(v),
                    batch: Some(batch),
                    gamma: Some(gamma.unwrap_or_else(|| rexp3_gamma(num_arms, batch))),
                }
            }
            PolicySpec::Ser4 { delta, epsilon, phi } => PolicySpec::Ser4 {
                delta: Some(delta.unwrap_or(base.ser4_delta)),
                epsilon: Some(epsilon.unwrap_or(base.ser4_epsilon)),
                phi: Some(phi.unwrap_or(base.ser4_phi)),
            },
            PolicySpec::Greedy => PolicySpec::Greedy,
        }
    }

    /// Instantiate a resolved spec. The greedy oracle needs the environment.
    pub fn build(
        &self,
        env: &dyn Environment,
        horizon: u64,
        scale: RewardScale,
    ) -> Result<Box<dyn Policy>, HarnessError> {
        let k = env.num_arms();
        let resolved = self.resolve(horizon, k);
        let label = self.label();
        let policy: Box<dyn Policy> = match resolved {
            PolicySpec::TiUcb {
                delta,
                omega,
                gamma,
                exploration_scale,
                ..
            } => {
                let Some(GammaSpec::Value(gamma)) = gamma else { unreachable!() };
                let params = TiUcbParams {
                    delta: delta.unwrap(),
                    omega: omega.unwrap(),
                    gamma,
                    exploration_scale: exploration_scale.unwrap(),
                };
                let p = TiUcb::new(k, params).map_err(|e| HarnessError::Invalid(vec![format!("{label}: {e}")]))?;
                Box::new(p.with_name(label))
            }
            PolicySpec::KlUcb { c } => Box::new(KlUcb::new(k, c.unwrap(), scale)),
            PolicySpec::SwUcb { tau, xi } => Box::new(SwUcb::new(k, tau.unwrap(), xi.unwrap())),
            PolicySpec::SwTs { tau } => Box::new(SwTs::new(k, tau.unwrap(), scale)),
            PolicySpec::SwKlUcb { tau, c } => Box::new(SwKlUcb::new(k, tau.unwrap(), c.unwrap(), scale)),
            PolicySpec::Rexp3 { batch, gamma, .. } => Box::new(Rexp3::new(k, batch.unwrap(), gamma.unwrap(), scale)),
            PolicySpec::Ser4 { delta, epsilon, phi } => {
                Box::new(Ser4::new(k, delta.unwrap(), epsilon.unwrap(), phi.unwrap(), scale))
            }
            PolicySpec::Greedy => Box::new(GreedyOracle::from_env(env, horizon)),
        };
        Ok(policy)
    }

    fn check(&self, horizon: u64, errors: &mut Vec<String>) {
        let label = self.label();
        let mut bad = |field: &str, why: &str| errors.push(format!("policies[{label}].{field}: {why}"));
        let prob = |x: &Option<f64>| x.is_some_and(|v| !(v > 0.0 && v <= 1.0));
        let pos = |x: &Option<f64>| x.is_some_and(|v| !(v > 0.0 && v.is_finite()));
        match self {
            PolicySpec::TiUcb {
                delta,
                omega,
                gamma,
                exploration_scale,
                ..
            } => {
                if delta.is_some_and(|d| !(d > 0.0 && d < 1.0)) {
                    bad("delta", "must lie in (0, 1)");
                }
                if omega == &Some(0) {
                    bad("omega", "must be at least 1");
                }
                match gamma {
                    Some(GammaSpec::Value(g)) if !(*g > 0.0 && g.is_finite()) => bad("gamma", "must be positive"),
                    Some(GammaSpec::Rule(GammaRule::Bound)) if *omega == Some(1) => {
                        bad("gamma", "\"bound\" needs omega of at least 2")
                    }
                    _ => {}
                }
                if pos(exploration_scale) {
                    bad("exploration_scale", "must be positive");
                }
                if horizon < 2 && delta.is_none() {
                    bad("delta", "default 1/T needs a horizon of at least 2");
                }
            }
            PolicySpec::KlUcb { c } | PolicySpec::SwKlUcb { c, .. } if c.is_some_and(|c| c < 0.0) => {
                bad("c", "must be non-negative")
            }
            PolicySpec::SwUcb { tau, xi } => {
                if tau == &Some(0) {
                    bad("tau", "must be at least 1");
                }
                if pos(xi) {
                    bad("xi", "must be positive");
                }
            }
            PolicySpec::SwTs { tau: Some(0) } => bad("tau", "must be at least 1"),
            PolicySpec::Rexp3 {
                variation_budget,
                batch,
                gamma,
            } => {
                if pos(variation_budget) {
                    bad("variation_budget", "must be positive");
                }
                if batch == &Some(0) {
                    bad("batch", "must be at least 1");
                }
                if gamma.is_some_and(|g| !(0.0..=1.0).contains(&g)) {
                    bad("gamma", "must lie in [0, 1]");
                }
            }
            PolicySpec::Ser4 { delta, epsilon, phi } => {
                if prob(delta) {
                    bad("delta", "must lie in (0, 1]");
                }
                if epsilon.is_some_and(|e| e < 0.0) {
                    bad("epsilon", "must be non-negative");
                }
                if phi.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                    bad("phi", "must lie in [0, 1]");
                }
            }
            _ => {}
        }
        if let PolicySpec::SwKlUcb { tau: Some(0), .. } = self {
            bad("tau", "must be at least 1");
        }
    }
}

/// An environment ready to play.
#[derive(Debug, Clone)]
pub enum BuiltEnv {
    Synthetic(SyntheticEnv),
    Trace(TraceEnvironment),
    Cost(Box<CostAdjusted<BuiltEnv>>),
}

impl Environment for BuiltEnv {
    fn num_arms(&self) -> usize {
        match self {
            BuiltEnv::Synthetic(e) => e.num_arms(),
            BuiltEnv::Trace(e) => e.num_arms(),
            BuiltEnv::Cost(e) => e.num_arms(),
        }
    }

    fn mean(&self, arm: ArmId, pull_index: u64) -> f64 {
        match self {
            BuiltEnv::Synthetic(e) => e.mean(arm, pull_index),
            BuiltEnv::Trace(e) => e.mean(arm, pull_index),
            BuiltEnv::Cost(e) => e.mean(arm, pull_index),
        }
    }

    fn sample(&self, arm: ArmId, pull_index: u64, rng: &mut SimRng) -> f64 {
        match self {
            BuiltEnv::Synthetic(e) => e.sample(arm, pull_index, rng),
            BuiltEnv::Trace(e) => e.sample(arm, pull_index, rng),
            BuiltEnv::Cost(e) => e.sample(arm, pull_index, rng),
        }
    }

    fn pull_limit(&self, arm: ArmId) -> Option<u64> {
        match self {
            BuiltEnv::Synthetic(e) => e.pull_limit(arm),
            BuiltEnv::Trace(e) => e.pull_limit(arm),
            BuiltEnv::Cost(e) => e.pull_limit(arm),
        }
    }
}

impl BuiltEnv {
    /// True when every mean is known rather than read off a single trace.
    pub fn has_known_means(&self) -> bool {
        match self {
            BuiltEnv::Synthetic(_) => true,
            BuiltEnv::Trace(t) => t.has_estimates(),
            BuiltEnv::Cost(c) => c.inner().has_known_means(),
        }
    }

    /// JSON description for the manifest.
    pub fn describe(&self) -> serde_json::Value {
        match self {
            BuiltEnv::Synthetic(e) => serde_json::json!({ "arms": e.arms, "noise_sd": e.noise_sd }),
            BuiltEnv::Trace(t) => serde_json::json!({ "trace_lengths": t.lengths(), "estimates": t.has_estimates() }),
            BuiltEnv::Cost(c) => {
                let stops: Vec<Option<u64>> = (0..c.num_arms()).map(|i| c.stop_pull(ArmId(i))).collect();
                serde_json::json!({ "inner": c.inner().describe(), "stop_pulls": stops })
            }
        }
    }
}

impl EnvSpec {
    pub fn num_arms(&self) -> Option<usize> {
        match self {
            EnvSpec::Sampled { families, .. } => Some(families.len()),
            EnvSpec::Arms { arms, .. } => Some(arms.len()),
            EnvSpec::Trace { .. } => None,
            EnvSpec::CostWrapped { inner, .. } => inner.num_arms(),
        }
    }

    /// Pin the sampling seed so the spec reproduces the same arms.
    pub fn resolve(&self, master_seed: u64) -> EnvSpec {
        match self {
            EnvSpec::Sampled {
                families,
                seed,
                noise_sd,
                ranges,
            } => EnvSpec::Sampled {
                families: families.clone(),
                seed: Some(seed.unwrap_or_else(|| mix_seed(master_seed, ENV_SALT))),
                noise_sd: *noise_sd,
                ranges: *ranges,
            },
            EnvSpec::CostWrapped { inner, cost } => EnvSpec::CostWrapped {
                inner: Box::new(inner.resolve(master_seed)),
                cost: cost.clone(),
            },
            other => other.clone(),
        }
    }

    /// Build the environment. `replication` perturbs the sampling seed when
    /// parameters are redrawn per run. Relative trace paths are taken from
    /// `base_dir`.
    pub fn build(
        &self,
        master_seed: u64,
        horizon: u64,
        replication: Option<u64>,
        base_dir: &Path,
    ) -> Result<BuiltEnv, HarnessError> {
        Ok(match self.resolve(master_seed) {
            EnvSpec::Sampled {
                families,
                seed,
                noise_sd,
                ranges,
            } => {
                let seed = seed.unwrap();
                let seed = replication.map_or(seed, |r| mix_seed(seed, r));
                let arms = families
                    .iter()
                    .enumerate()
                    .map(|(i, &kind)| sample_arm(kind, seed, ArmId(i), &ranges))
                    .collect();
                BuiltEnv::Synthetic(SyntheticEnv::new(arms, noise_sd))
            }
            EnvSpec::Arms { arms, noise_sd } => BuiltEnv::Synthetic(SyntheticEnv::new(arms, noise_sd)),
            EnvSpec::Trace { path, estimates } => {
                let trace = load_trace(base_dir.join(&path))?;
                let trace = match estimates {
                    Some(est) => {
                        let est = read_trace(std::fs::File::open(base_dir.join(est))?)?;
                        let table = (0..est.num_arms()).map(|i| est.rewards(ArmId(i)).to_vec()).collect();
                        trace.with_estimates(table)?
                    }
                    None => trace,
                };
                BuiltEnv::Trace(trace)
            }
            EnvSpec::CostWrapped { inner, cost } => {
                let inner = inner.build(master_seed, horizon, replication, base_dir)?;
                BuiltEnv::Cost(Box::new(CostAdjusted::new(inner, cost, horizon)))
            }
        })
    }

    fn check(&self, errors: &mut Vec<String>) {
        match self {
            EnvSpec::Sampled {
                families,
                noise_sd,
                ranges,
                ..
            } => {
                if families.is_empty() {
                    errors.push("environment.families: at least one arm required".into());
                }
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    errors.push("environment.noise_sd: must be non-negative".into());
                }
                for (name, (lo, hi)) in [("a", ranges.a), ("b", ranges.b), ("c", ranges.c), ("rho", ranges.rho)] {
                    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                        errors.push(format!("environment.ranges.{name}: need lo < hi"));
                    }
                }
            }
            EnvSpec::Arms { arms, noise_sd } => {
                if arms.is_empty() {
                    errors.push("environment.arms: at least one arm required".into());
                }
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    errors.push("environment.noise_sd: must be non-negative".into());
                }
            }
            EnvSpec::Trace { .. } => {}
            EnvSpec::CostWrapped { inner, cost } => {
                inner.check(errors);
                if let Some(k) = inner.num_arms() {
                    if cost.costs.len() != k {
                        errors.push(format!("environment.cost.costs: expected {k} entries, got {}", cost.costs.len()));
                    }
                }
                if cost.costs.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
                    errors.push("environment.cost.costs: must be non-negative".into());
                }
                if cost.stall_window == 0 {
                    errors.push("environment.cost.stall_window: must be at least 1".into());
                }
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Invalid(vec![e.to_string()]))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check field ranges, listing every offending field.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errors = Vec::new();
        if self.horizon == 0 {
            errors.push("horizon: must be at least 1".into());
        }
        if self.replications == 0 {
            errors.push("replications: must be at least 1".into());
        }
        if !(self.reward_bounds.hi > self.reward_bounds.lo) {
            errors.push("reward_bounds: hi must exceed lo".into());
        }
        if self.policies.is_empty() {
            errors.push("policies: at least one policy required".into());
        }
        let mut labels: Vec<String> = self.policies.iter().map(PolicySpec::label).collect();
        labels.sort();
        for w in labels.windows(2).filter(|w| w[0] == w[1]) {
            errors.push(format!("policies: duplicate name {}", w[0]));
        }
        self.environment.check(&mut errors);
        for p in &self.policies {
            p.check(self.horizon, &mut errors);
        }
        if let Some(sweep) = &self.sweep {
            if sweep.omegas.is_empty() || sweep.omegas.contains(&0) {
                errors.push("sweep.omegas: need at least one window, each at least 1".into());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Invalid(errors))
        }
    }

    /// The config with every default made explicit.
    pub fn resolved(&self, num_arms: usize) -> ExperimentConfig {
        ExperimentConfig {
            environment: self.environment.resolve(self.seed),
            policies: self
                .policies
                .iter()
                .map(|p| p.resolve(self.horizon, num_arms))
                .collect(),
            ..self.clone()
        }
    }
}
