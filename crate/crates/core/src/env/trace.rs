use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{ArmId, Environment, SimRng};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace has no rows")]
    Empty,
    #[error("arm {0} has no rows")]
    MissingArm(usize),
    #[error("estimates for arm {arm} cover {have} pulls, trace has {need}")]
    ShortEstimates { arm: usize, have: usize, need: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    arm: usize,
    pull_index: u64,
    reward: f64,
}

/// Recorded per-arm reward sequences, replayed by pull count.
///
/// Without separate estimates the recorded value doubles as the mean, so
/// regret on a trace is measured against the trace itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEnvironment {
    rewards: Vec<Vec<f64>>,
    estimates: Option<Vec<Vec<f64>>>,
}

impl TraceEnvironment {
    pub fn new(rewards: Vec<Vec<f64>>) -> Self {
        Self {
            rewards,
            estimates: None,
        }
    }

    /// Use `estimates[i][s - 1]` as the mean of arm `i` at pull `s`.
    pub fn with_estimates(mut self, estimates: Vec<Vec<f64>>) -> Result<Self, TraceError> {
        for (arm, seq) in self.rewards.iter().enumerate() {
            let have = estimates.get(arm).map_or(0, Vec::len);
            if have < seq.len() {
                return Err(TraceError::ShortEstimates {
                    arm,
                    have,
                    need: seq.len(),
                });
            }
        }
        self.estimates = Some(estimates);
        Ok(self)
    }

    pub fn has_estimates(&self) -> bool {
        self.estimates.is_some()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.rewards.iter().map(Vec::len).collect()
    }

    pub fn is_ragged(&self) -> bool {
        self.rewards.windows(2).any(|w| w[0].len() != w[1].len())
    }

    pub fn rewards(&self, arm: ArmId) -> &[f64] {
        &self.rewards[arm.0]
    }
}

impl Environment for TraceEnvironment {
    fn num_arms(&self) -> usize {
        self.rewards.len()
    }

    fn mean(&self, arm: ArmId, pull_index: u64) -> f64 {
        let table = self.estimates.as_ref().unwrap_or(&self.rewards);
        table[arm.0][pull_index as usize - 1]
    }

    fn sample(&self, arm: ArmId, pull_index: u64, _rng: &mut SimRng) -> f64 {
        self.rewards[arm.0][pull_index as usize - 1]
    }

    fn pull_limit(&self, arm: ArmId) -> Option<u64> {
        Some(self.rewards[arm.0].len() as u64)
    }
}

/// Parse `arm,pull_index,reward` rows. Within an arm, pull indices must run
/// 1, 2, 3, … in file order; rows of different arms may interleave.
pub fn read_trace<R: Read>(reader: R) -> Result<TraceEnvironment, TraceError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rewards: Vec<Vec<f64>> = Vec::new();
    for result in rdr.deserialize::<Row>() {
        let row = result.map_err(|e| TraceError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if rewards.len() <= row.arm {
            rewards.resize_with(row.arm + 1, Vec::new);
        }
        let seq = &mut rewards[row.arm];
        if row.pull_index != seq.len() as u64 + 1 {
            return Err(TraceError::Parse {
                line: rdr.position().line().saturating_sub(1).max(2),
                message: format!(
                    "arm {} expected pull_index {}, found {}",
                    row.arm,
                    seq.len() + 1,
                    row.pull_index
                ),
            });
        }
        if !row.reward.is_finite() {
            return Err(TraceError::Parse {
                line: rdr.position().line().saturating_sub(1).max(2),
                message: format!("non-finite reward {}", row.reward),
            });
        }
        seq.push(row.reward);
    }
    if rewards.is_empty() {
        return Err(TraceError::Empty);
    }
    if let Some(arm) = rewards.iter().position(Vec::is_empty) {
        return Err(TraceError::MissingArm(arm));
    }
    let env = TraceEnvironment::new(rewards);
    if env.is_ragged() {
        log::info!("trace arms have unequal lengths: {:?}", env.lengths());
    }
    Ok(env)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<TraceEnvironment, TraceError> {
    read_trace(File::open(path)?)
}

pub fn write_trace<W: Write>(env: &TraceEnvironment, writer: W) -> Result<(), TraceError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (arm, seq) in env.rewards.iter().enumerate() {
        for (i, &reward) in seq.iter().enumerate() {
            wtr.serialize(Row {
                arm,
                pull_index: i as u64 + 1,
                reward,
            })
            .map_err(|e| TraceError::Io(e.into()))?;
        }
    }
    wtr.flush()?;
    Ok(())
}
