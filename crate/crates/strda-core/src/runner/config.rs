//! Experiment configuration: one TOML file with a version field. Unknown
//! keys are rejected everywhere; the resolved config's canonical
//! serialization is hashed and stamped on every artifact.

use crate::corpus::CorpusSpec;
use crate::dd::FocalConfig;
use crate::error::{Error, Result};
use crate::hdge::HdgeConfig;
use crate::recognizer::TrainConfig;
use crate::selftrain::SelfTrainConfig;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Hdge,
    Dd,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::Hdge => write!(f, "hdge"),
            EstimatorKind::Dd => write!(f, "dd"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Which estimator's scores drive stratification.
    pub kind: EstimatorKind,
    /// Train and score both estimators (diagnostics cover both); the unused
    /// one costs extra wall clock only.
    pub train_all: bool,
    pub hdge: HdgeConfig,
    pub dd: FocalConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Hdge,
            train_all: true,
            hdge: HdgeConfig::default(),
            dd: FocalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StratifyConfig {
    pub n: usize,
}

impl Default for StratifyConfig {
    fn default() -> Self {
        StratifyConfig { n: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: vec![1, 2, 3],
            out_dir: PathBuf::from("runs/default"),
        }
    }
}

/// Full declarative description of an experiment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub corpus: CorpusSpec,
    pub baseline: TrainConfig,
    pub estimator: EstimatorConfig,
    pub stratify: StratifyConfig,
    pub selftrain: SelfTrainConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            corpus: CorpusSpec::default(),
            baseline: TrainConfig::default(),
            estimator: EstimatorConfig::default(),
            stratify: StratifyConfig::default(),
            selftrain: SelfTrainConfig::default(),
            run: RunConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.corpus.validate()?;
        self.estimator.hdge.validate()?;
        self.estimator.dd.validate()?;
        if self.stratify.n == 0 {
            return Err(Error::Config("stratify.n must be >= 1".into()));
        }
        if self.stratify.n > self.corpus.target_count {
            return Err(Error::Config(format!(
                "stratify.n = {} exceeds target_count = {}",
                self.stratify.n, self.corpus.target_count
            )));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::Config("run.seeds must not be empty".into()));
        }
        if self.baseline.batch_size == 0 || self.selftrain.batch_size == 0 {
            return Err(Error::Config("batch sizes must be >= 1".into()));
        }
        Ok(())
    }

    /// Stable digest of the resolved config (canonical TOML serialization).
    pub fn hash_hex(&self) -> String {
        let canon = self.to_toml_string();
        let d = Sha256::digest(canon.as_bytes());
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash_hex(), back.hash_hex());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"
version = 1
[corpus]
source_count = 10
target_count = 5
bogus_key = 3
"#;
        let err = ExperimentConfig::from_toml_str(text);
        assert!(err.is_err());
        let msg = format!("{}", err.unwrap_err());
        assert!(msg.contains("bogus_key"), "unhelpful error: {msg}");
    }

    #[test]
    fn version_checked() {
        let text = "version = 99\n";
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.stratify.n = 3;
        assert_ne!(a.hash_hex(), b.hash_hex());
    }

    #[test]
    fn invalid_cross_field_combinations_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.stratify.n = 5000;
        assert!(cfg.validate().is_err());
        let mut cfg2 = ExperimentConfig::default();
        cfg2.run.seeds.clear();
        assert!(cfg2.validate().is_err());
        let mut cfg3 = ExperimentConfig::default();
        cfg3.estimator.hdge.beta = 1.0;
        assert!(cfg3.validate().is_err());
    }
}
