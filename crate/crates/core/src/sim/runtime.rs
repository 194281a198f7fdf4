use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::EmpiricalCdf;
use crate::error::{Error, Result};

/// Stand-in for a measured serverless run-time trace: shift 1.0 s, rate 2.0/s.
pub const DEFAULT_SHIFT_S: f64 = 1.0;
pub const DEFAULT_RATE: f64 = 2.0;
pub const DEFAULT_TIMEOUT_S: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub enum DelayDistribution {
    ShiftedExp { shift: f64, rate: f64 },
    Empirical(EmpiricalCdf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Done,
    TimedOut,
    Crashed,
}

/// One sampled worker run: its nominal finish time and what became of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerOutcome {
    pub time: f64,
    pub status: TaskStatus,
}

impl WorkerOutcome {
    /// Arrival time of the output, `+inf` if it never arrives.
    pub fn arrival(&self) -> f64 {
        match self.status {
            TaskStatus::Done => self.time,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeModel {
    pub distribution: DelayDistribution,
    pub crash_probability: f64,
    pub timeout_s: f64,
}

impl Default for RuntimeModel {
    fn default() -> Self {
        RuntimeModel {
            distribution: DelayDistribution::ShiftedExp {
                shift: DEFAULT_SHIFT_S,
                rate: DEFAULT_RATE,
            },
            crash_probability: 0.0,
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }
}

impl RuntimeModel {
    pub fn new(distribution: DelayDistribution, crash_probability: f64, timeout_s: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&crash_probability) {
            return Err(Error::Validation(format!("crash probability {crash_probability} not in [0, 1)")));
        }
        if !(timeout_s > 0.0) {
            return Err(Error::Validation(format!("timeout must be positive, got {timeout_s}")));
        }
        if let DelayDistribution::ShiftedExp { shift, rate } = distribution {
            if !(shift >= 0.0 && shift.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::Validation(format!("bad shifted exponential ({shift}, {rate})")));
            }
        }
        Ok(RuntimeModel {
            distribution,
            crash_probability,
            timeout_s,
        })
    }

    /// Draws one run time. Every call consumes the same kinds of draws in the
    /// same order, so schemes sharing a seed see the same worker times.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WorkerOutcome {
        let time = match &self.distribution {
            DelayDistribution::ShiftedExp { shift, rate } => {
                shift + Exp::new(*rate).expect("validated rate").sample(rng)
            }
            DelayDistribution::Empirical(cdf) => cdf.sample(rng),
        };
        let crashed = rng.random::<f64>() < self.crash_probability;
        let status = if crashed {
            TaskStatus::Crashed
        } else if time > self.timeout_s {
            TaskStatus::TimedOut
        } else {
            TaskStatus::Done
        };
        WorkerOutcome { time, status }
    }

    pub fn sample_all<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<WorkerOutcome> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// The base run-time CDF, sampled when the model is parametric.
    pub fn base_cdf<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<EmpiricalCdf> {
        match &self.distribution {
            DelayDistribution::Empirical(cdf) => Ok(cdf.clone()),
            DelayDistribution::ShiftedExp { shift, rate } => {
                let exp = Exp::new(*rate).expect("validated rate");
                let s: Vec<f64> = (0..samples).map(|_| shift + exp.sample(rng)).collect();
                EmpiricalCdf::from_samples(&s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Empirical,
    ShiftedExp,
}

/// JSON form:
/// `{distribution: "empirical"|"shifted_exp", samples_file?, shift?, rate?, crash_probability, timeout_s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeModelConfig {
    pub distribution: DistributionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default)]
    pub crash_probability: f64,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

impl Default for RuntimeModelConfig {
    fn default() -> Self {
        RuntimeModelConfig {
            distribution: DistributionKind::ShiftedExp,
            samples_file: None,
            shift: Some(DEFAULT_SHIFT_S),
            rate: Some(DEFAULT_RATE),
            crash_probability: 0.0,
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }
}

impl RuntimeModelConfig {
    /// Resolves the config into a model. Relative sample paths are taken
    /// relative to `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<RuntimeModel> {
        let distribution = match self.distribution {
            DistributionKind::ShiftedExp => DelayDistribution::ShiftedExp {
                shift: self.shift.unwrap_or(DEFAULT_SHIFT_S),
                rate: self.rate.unwrap_or(DEFAULT_RATE),
            },
            DistributionKind::Empirical => {
                let file = self
                    .samples_file
                    .as_ref()
                    .ok_or_else(|| Error::Validation("empirical distribution needs samples_file".into()))?;
                let path = match base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                DelayDistribution::Empirical(EmpiricalCdf::from_samples(&load_samples(&path)?)?)
            }
        };
        RuntimeModel::new(distribution, self.crash_probability, self.timeout_s)
    }
}

/// Reads run-time samples: one number per line (first comma-separated field),
/// skipping blank lines, `#` comments and a non-numeric header.
pub fn load_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() && lineno == 0 => continue,
            Err(_) => {
                return Err(Error::Validation(format!(
                    "{}:{}: not a number: {field:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}
