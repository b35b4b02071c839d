//! Experiment configuration files (TOML) and their load-time validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryError, AttackPlan};
use crate::byitfl::ByitflConfig;
use crate::discriminator::{DEFAULT_COEFFS, DEFAULT_COEFF_SCALE};
use crate::field::PrimeModulus;
use crate::flsim::{Aggregator, TaskConfig, TaskKind};
use crate::lobyitfl::LobyitflConfig;
use crate::params::{ConfigError, ProtocolParams, DEFAULT_EPSILON, DEFAULT_Q};

#[derive(Debug, Error)]
pub enum ExperimentConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Protocol(#[from] ConfigError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error("invalid setting: {0}")]
    Invalid(String),
}

/// Protocol parameters without the model dimension, which the task fixes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub n: usize,
    pub b: usize,
    pub t: usize,
    pub e: usize,
    pub m: usize,
    pub tau: usize,
    pub q: u64,
    pub p: PrimeModulus,
    pub epsilon: f64,
    pub coeffs: Vec<f64>,
    pub coeff_scale: u64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            n: 10,
            b: 0,
            t: 1,
            e: 0,
            m: 1,
            tau: DEFAULT_COEFFS.len() - 1,
            q: DEFAULT_Q,
            p: PrimeModulus::new(PrimeModulus::MERSENNE_127).expect("Mersenne prime"),
            epsilon: DEFAULT_EPSILON,
            coeffs: DEFAULT_COEFFS.to_vec(),
            coeff_scale: DEFAULT_COEFF_SCALE,
        }
    }
}

impl ProtocolSection {
    pub fn params(&self, d: usize) -> ProtocolParams {
        ProtocolParams {
            n: self.n,
            b: self.b,
            t: self.t,
            e: self.e,
            m: self.m,
            tau: self.tau,
            q: self.q,
            d,
            modulus: self.p,
            epsilon: self.epsilon,
            coeffs: self.coeffs.clone(),
            coeff_scale: self.coeff_scale,
        }
    }
}

fn default_iterations() -> usize {
    100
}
fn default_lr() -> f64 {
    0.5
}
fn default_steps() -> usize {
    1
}
fn default_batch() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Global rate `eta` in `w <- w - eta u`.
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Users' local SGD rate; defaults to `lr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_lr: Option<f64>,
    #[serde(default = "default_steps")]
    pub local_steps: usize,
    /// Minibatch size; 0 means full batch.
    #[serde(default = "default_batch")]
    pub batch: usize,
    /// Use the trust-weighted average directly, skipping rescaling and
    /// flipping.
    #[serde(default)]
    pub use_nu: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            lr: default_lr(),
            local_lr: None,
            local_steps: default_steps(),
            batch: default_batch(),
            use_nu: false,
        }
    }
}

impl TrainConfig {
    pub fn local_rate(&self) -> f64 {
        self.local_lr.unwrap_or(self.lr)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Session file with pre-provisioned low-cost material.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<PathBuf>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            session: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TaskSpec {
    Name(TaskKind),
    Full(TaskConfig),
}

fn task_spec<'de, D: serde::Deserializer<'de>>(d: D) -> Result<TaskConfig, D::Error> {
    Ok(match TaskSpec::deserialize(d)? {
        TaskSpec::Name(k) => TaskConfig::new(k),
        TaskSpec::Full(c) => c,
    })
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Either a task name or a table.
    #[serde(deserialize_with = "task_spec")]
    pub task: TaskConfig,
    pub aggregator: Aggregator,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub attack: AttackPlan,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(task: TaskKind, aggregator: Aggregator) -> Self {
        Self {
            task: TaskConfig::new(task),
            aggregator,
            protocol: ProtocolSection::default(),
            attack: AttackPlan::default(),
            train: TrainConfig::default(),
            seeds: default_seeds(),
            output: OutputConfig::default(),
        }
    }

    pub fn params(&self) -> ProtocolParams {
        self.protocol.params(self.task.model_dim())
    }

    /// Cross-field checks; protocol aggregators also check their resilience
    /// and field-size bounds.
    pub fn validate(&self) -> Result<(), ExperimentConfigError> {
        let p = self.params();
        if p.n == 0 {
            return Err(ExperimentConfigError::Invalid("n must be positive".into()));
        }
        if self.task.features == 0 || self.task.samples_per_user == 0 {
            return Err(ExperimentConfigError::Invalid(
                "task needs features and samples".into(),
            ));
        }
        if self.task.root_samples == 0 {
            return Err(ExperimentConfigError::Invalid(
                "the root dataset must be nonempty".into(),
            ));
        }
        if let Some(a) = self.task.noniid {
            if !(0.0..=1.0).contains(&a) {
                return Err(ExperimentConfigError::Invalid(format!(
                    "noniid bias must lie in [0, 1], got {a}"
                )));
            }
        }
        let t = &self.train;
        if !(t.lr.is_finite() && t.lr > 0.0 && t.local_rate().is_finite() && t.local_rate() >= 0.0)
        {
            return Err(ExperimentConfigError::Invalid(
                "learning rates must be finite and positive".into(),
            ));
        }
        if t.local_steps == 0 {
            return Err(ExperimentConfigError::Invalid(
                "local_steps must be at least 1".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(ExperimentConfigError::Invalid(
                "at least one seed is required".into(),
            ));
        }
        self.attack.validate(p.n, p.b, p.t, p.e)?;
        match self.aggregator {
            Aggregator::Byitfl => {
                ByitflConfig::new(p)?;
            }
            Aggregator::Lobyitfl => {
                LobyitflConfig::new(p)?;
            }
            Aggregator::FedAvg | Aggregator::FltrustHPlain => {}
        }
        Ok(())
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ExperimentConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ExperimentConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_toml(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml(
            "task = \"synthetic_logreg\"\naggregator = \"fedavg\"\n",
            Path::new("x"),
        )
        .unwrap();
        assert_eq!(c.protocol.q, 1024);
        assert_eq!(c.protocol.epsilon, 0.02);
        assert_eq!(c.task.root_samples, 100);
        assert_eq!(
            c,
            ExperimentConfig::new(TaskKind::SyntheticLogreg, Aggregator::FedAvg)
        );
    }
}
