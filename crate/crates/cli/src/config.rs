//! Experiment config files (TOML, or JSON by extension) and their
//! resolution into core types. Every random choice derives from
//! `master_seed`.

use std::path::{Path, PathBuf};

use fedct_core::consensus::ConsensusSpec;
use fedct_core::data::{load_csv, make_blobs, split_train_test_unlabeled, LabeledDataset, PartitionScheme, PartitionSpec};
use fedct_core::learners::ModelSpec;
use fedct_core::privacy::NoiseSpec;
use fedct_core::protocol::{ExperimentConfig, ExperimentData, ProtocolKind};
use fedct_core::rng::derive_seed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const DATA_STREAM: u64 = 0xda7a;
const SPLIT_STREAM: u64 = 0x5b17;
const PARTITION_STREAM: u64 = 0x9a27;

fn default_train() -> f64 {
    0.4
}
fn default_test() -> f64 {
    0.2
}
fn default_unlabeled() -> f64 {
    0.4
}
fn default_k() -> usize {
    100
}
fn default_epochs() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobsSection {
    pub n: usize,
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSection {
    pub path: PathBuf,
    pub label_column: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "default_train")]
    pub train: f64,
    #[serde(default = "default_test")]
    pub test: f64,
    #[serde(default = "default_unlabeled")]
    pub unlabeled: f64,
    pub blobs: Option<BlobsSection>,
    pub csv: Option<CsvSection>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PartitionSection {
    pub clients: usize,
    #[serde(flatten)]
    pub scheme: PartitionScheme,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub epsilon: Option<f64>,
    pub flip_prob: Option<f64>,
    pub sensitivity: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub client: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub master_seed: u64,
    pub protocol: ProtocolKind,
    pub rounds: usize,
    pub period: usize,
    pub data: DataSection,
    pub partition: PartitionSection,
    #[serde(default = "majority")]
    pub consensus: ConsensusSpec,
    pub noise: Option<NoiseSection>,
    pub learner: Option<ModelSpec>,
    pub learners: Option<Vec<ModelSpec>>,
    pub sensitivity: Option<SensitivitySection>,
    pub attack: Option<AttackSection>,
}

fn majority() -> ConsensusSpec {
    ConsensusSpec::Majority
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub master: u64,
    pub data: u64,
    pub split: u64,
    pub partition: u64,
    pub clients: Vec<u64>,
}

/// A parsed config file together with its location and digest.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: FileConfig,
    pub path: PathBuf,
    /// SHA-256 of the config as canonical JSON (sorted keys, no whitespace).
    pub digest: String,
}

fn parse_error(e: impl std::fmt::Display) -> CliError {
    let message = e.to_string();
    let key = message
        .split('`')
        .nth(1)
        .filter(|k| !k.is_empty())
        .unwrap_or("config")
        .to_string();
    CliError::config(&key, message.trim())
}

impl LoadedConfig {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let value: serde_json::Value = if is_json {
            serde_json::from_str(&text).map_err(parse_error)?
        } else {
            let t: toml::Value = toml::from_str(&text).map_err(parse_error)?;
            serde_json::to_value(t).map_err(parse_error)?
        };
        let digest = hex::encode(Sha256::digest(serde_json::to_string(&value)?.as_bytes()));
        let file: FileConfig = serde_json::from_value(value).map_err(parse_error)?;
        let loaded = Self { file, path: path.to_path_buf(), digest };
        loaded.experiment()?.validate(loaded.file.partition.clients)?;
        Ok(loaded)
    }

    pub fn seeds(&self) -> Seeds {
        let master = self.file.master_seed;
        let exp = ExperimentConfig::new(self.file.protocol, ModelSpec::DummyMajority, 1, 1, master);
        Seeds {
            master,
            data: derive_seed(master, &[DATA_STREAM]),
            split: derive_seed(master, &[SPLIT_STREAM]),
            partition: derive_seed(master, &[PARTITION_STREAM]),
            clients: (0..self.file.partition.clients).map(|i| exp.client_seed(i)).collect(),
        }
    }

    fn learners(&self) -> CliResult<Vec<ModelSpec>> {
        match (&self.file.learner, &self.file.learners) {
            (Some(l), None) => Ok(vec![l.clone()]),
            (None, Some(ls)) if !ls.is_empty() => Ok(ls.clone()),
            (None, Some(_)) => Err(CliError::config("learners", "list is empty")),
            (Some(_), Some(_)) => Err(CliError::config("learner", "give either learner or learners, not both")),
            (None, None) => Err(CliError::config("learner", "missing learner section")),
        }
    }

    fn noise(&self) -> CliResult<Option<NoiseSpec>> {
        let Some(n) = &self.file.noise else { return Ok(None) };
        let spec = match (n.epsilon, n.flip_prob) {
            (Some(eps), None) => NoiseSpec::from_budget(eps, n.sensitivity),
            (None, Some(p)) => NoiseSpec::from_flip_prob(p, n.sensitivity),
            _ => return Err(CliError::config("noise", "give exactly one of epsilon or flip_prob")),
        };
        spec.map(Some).map_err(|e| CliError::config("noise", e))
    }

    /// The protocol configuration, without running data-dependent checks.
    pub fn experiment(&self) -> CliResult<ExperimentConfig> {
        let f = &self.file;
        let mut cfg = ExperimentConfig::new(f.protocol, ModelSpec::DummyMajority, f.rounds, f.period, f.master_seed);
        cfg.learners = self.learners()?;
        cfg.consensus = f.consensus;
        cfg.noise = self.noise()?;
        Ok(cfg)
    }

    fn dataset(&self) -> CliResult<LabeledDataset> {
        let d = &self.file.data;
        match (&d.blobs, &d.csv) {
            (Some(b), None) => {
                let seed = derive_seed(self.file.master_seed, &[DATA_STREAM]);
                make_blobs(b.n, b.dim, b.classes, b.separation, seed).map_err(|e| CliError::config("data.blobs", e))
            }
            (None, Some(c)) => {
                let path = if c.path.is_absolute() {
                    c.path.clone()
                } else {
                    self.path.parent().unwrap_or(Path::new(".")).join(&c.path)
                };
                Ok(load_csv(&path, &c.label_column)?)
            }
            _ => Err(CliError::config("data", "give exactly one of data.blobs or data.csv")),
        }
    }

    /// Loads or generates the dataset, splits it and partitions the
    /// training part across clients.
    pub fn experiment_data(&self) -> CliResult<ExperimentData> {
        let d = &self.file.data;
        let seeds = self.seeds();
        let ds = self.dataset()?;
        let (train, test, unlabeled) = split_train_test_unlabeled(&ds, d.train, d.test, d.unlabeled, seeds.split)
            .map_err(|e| CliError::config("data", e))?;
        let spec = PartitionSpec { clients: self.file.partition.clients, scheme: self.file.partition.scheme, seed: seeds.partition };
        let clients = spec.apply(&train)?;
        Ok(ExperimentData { clients, test, unlabeled })
    }
}
