//! Protocol orchestration: FedCT, DP-FedCT and baselines.
//!
//! One protocol round is one `fit_update` per client; clients exchange
//! messages every `period` rounds, giving `rounds / period` communication
//! rounds. Each communication round produces one [`RoundRecord`]. Per-client
//! randomness derives from `master_seed` and the client index only, so
//! results do not depend on how rayon schedules clients.

mod baselines;
mod fedavg;
mod fedct;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::consensus::ConsensusSpec;
use crate::data::{LabelVector, LabeledDataset, UnlabeledDataset};
use crate::learners::{LearnerConfig, LearnerState, ModelSpec};
use crate::privacy::NoiseSpec;
use crate::rng::derive_seed;
use crate::{Error, Result};

pub use baselines::{run_centralized, run_local_only, run_pate, PateOutcome};
pub use fedavg::{average_parameters, run_fedavg};
pub use fedct::run_fedct;

const LEARNER_STREAM: u64 = 0x1ea5;
const NOISE_STREAM: u64 = 0xd9;
const REPAIR_STREAM: u64 = 0x5e7;
const STUDENT_INDEX: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Fedct,
    DpFedct,
    Fedavg,
    LocalOnly,
    Centralized,
    Pate,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Fedct => "fedct",
            ProtocolKind::DpFedct => "dp-fedct",
            ProtocolKind::Fedavg => "fedavg",
            ProtocolKind::LocalOnly => "local-only",
            ProtocolKind::Centralized => "centralized",
            ProtocolKind::Pate => "pate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    /// One spec per client, or a single spec shared by all clients.
    pub learners: Vec<ModelSpec>,
    pub consensus: ConsensusSpec,
    pub noise: Option<NoiseSpec>,
    /// Total local rounds `T`.
    pub rounds: usize,
    /// Communication period `b`.
    pub period: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolKind, learner: ModelSpec, rounds: usize, period: usize, master_seed: u64) -> Self {
        Self {
            protocol,
            learners: vec![learner],
            consensus: ConsensusSpec::Majority,
            noise: None,
            rounds,
            period,
            master_seed,
        }
    }

    pub fn spec_for(&self, client: usize) -> &ModelSpec {
        if self.learners.len() == 1 {
            &self.learners[0]
        } else {
            &self.learners[client]
        }
    }

    /// Learner config for `client`, with its seed derived from the master seed.
    pub fn learner_config(&self, client: usize) -> LearnerConfig {
        LearnerConfig::new(self.spec_for(client).clone(), self.client_seed(client))
    }

    pub fn client_seed(&self, client: usize) -> u64 {
        derive_seed(self.master_seed, &[LEARNER_STREAM, client as u64])
    }

    pub(crate) fn student_config(&self) -> LearnerConfig {
        LearnerConfig::new(self.learners[0].clone(), derive_seed(self.master_seed, &[LEARNER_STREAM, STUDENT_INDEX]))
    }

    pub(crate) fn noise_seed(&self, client: usize, round: usize) -> u64 {
        derive_seed(self.master_seed, &[NOISE_STREAM, client as u64, round as u64])
    }

    pub(crate) fn repair_seed(&self, client: usize, round: usize) -> u64 {
        derive_seed(self.master_seed, &[REPAIR_STREAM, client as u64, round as u64])
    }

    pub fn communication_rounds(&self) -> usize {
        self.rounds / self.period
    }

    /// Checks the config against a client count `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::config("clients", "need at least one client"));
        }
        if self.learners.is_empty() {
            return Err(Error::config("learners", "no learner configured"));
        }
        if self.learners.len() != 1 && self.learners.len() != m {
            return Err(Error::config(
                "learners",
                format!("expected 1 or {m} learner specs, got {}", self.learners.len()),
            ));
        }
        for spec in &self.learners {
            spec.validate()?;
        }
        if self.period < 1 || self.period > self.rounds {
            return Err(Error::config("period", format!("need 1 <= period <= rounds, got period {} with rounds {}", self.period, self.rounds)));
        }
        self.consensus.validate()?;
        match (self.protocol, &self.noise) {
            (ProtocolKind::DpFedct, None) => return Err(Error::config("noise", "dp-fedct requires a noise section")),
            (ProtocolKind::Fedct, Some(_)) => return Err(Error::config("noise", "fedct does not take noise; use dp-fedct")),
            _ => {}
        }
        if self.protocol == ProtocolKind::Fedavg {
            let first = self.spec_for(0);
            if !first.is_parametric() {
                return Err(Error::config("learners", format!("fedavg needs parametric learners, got {}", first.name())));
            }
            if (0..m).any(|i| self.spec_for(i) != first) {
                return Err(Error::config("learners", "fedavg needs identical learners on every client"));
            }
        }
        Ok(())
    }
}

/// Client shards, test set and unlabeled pool of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub clients: Vec<LabeledDataset>,
    pub test: LabeledDataset,
    pub unlabeled: UnlabeledDataset,
}

impl ExperimentData {
    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn num_classes(&self) -> usize {
        self.test.num_classes()
    }

    pub fn dim(&self) -> usize {
        self.test.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let (d, c) = (self.dim(), self.num_classes());
        for (i, shard) in self.clients.iter().enumerate() {
            if shard.is_empty() {
                return Err(Error::for_client(i, Error::EmptyDataset));
            }
            if shard.dim() != d {
                return Err(Error::for_client(i, Error::DimensionMismatch { expected: d, actual: shard.dim() }));
            }
            if shard.num_classes() != c {
                return Err(Error::for_client(i, Error::invalid("class count differs from test set")));
            }
        }
        if self.unlabeled.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: self.unlabeled.dim() });
        }
        Ok(())
    }

    /// All client shards concatenated in client order.
    pub fn pooled(&self) -> Result<LabeledDataset> {
        let mut iter = self.clients.iter();
        let first = iter.next().ok_or(Error::EmptyDataset)?.clone();
        iter.try_fold(first, |acc, d| acc.concat(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientRound {
    pub train_acc: f64,
    pub test_acc: f64,
    pub bytes_sent: u64,
    /// Rows the client trained on this round, `|D^i| + |P|`.
    #[serde(skip)]
    pub train_size: usize,
}

/// Telemetry for one communication round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based communication round.
    pub round: usize,
    pub clients: Vec<ClientRound>,
    /// Entries where the consensus differs from the previous round's.
    pub consensus_changes: usize,
    /// Non-ABSTAIN consensus entries, i.e. `|P|` for the next round.
    pub pool_size: usize,
    pub consensus: Option<LabelVector>,
    pub wall_time: Duration,
}

impl RoundRecord {
    pub fn mean_test_acc(&self) -> f64 {
        self.clients.iter().map(|c| c.test_acc).sum::<f64>() / self.clients.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub protocol: ProtocolKind,
    pub records: Vec<RoundRecord>,
    /// Final client models (the single pooled model for centralized runs,
    /// the teachers for PATE).
    pub states: Vec<LearnerState>,
    pub final_consensus: Option<LabelVector>,
    /// PATE student.
    pub student: Option<LearnerState>,
    pub student_test_acc: Option<f64>,
}

impl RunOutcome {
    /// Mean client test accuracy of the last round, or the student's for PATE.
    pub fn final_accuracy(&self) -> f64 {
        if let Some(acc) = self.student_test_acc {
            return acc;
        }
        self.records.last().map_or(0.0, RoundRecord::mean_test_acc)
    }
}

/// Validates and dispatches on `cfg.protocol`.
pub fn run(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<RunOutcome> {
    cfg.validate(data.num_clients())?;
    data.validate()?;
    match cfg.protocol {
        ProtocolKind::Fedct | ProtocolKind::DpFedct => run_fedct(cfg, data),
        ProtocolKind::Fedavg => run_fedavg(cfg, data),
        ProtocolKind::LocalOnly => run_local_only(cfg, data),
        ProtocolKind::Centralized => run_centralized(cfg, data),
        ProtocolKind::Pate => run_pate(cfg, data).map(PateOutcome::into_outcome),
    }
}

/// Local update steps per communication round. Batch learners refit from
/// scratch deterministically, so repeating the fit within a period changes
/// nothing and one call stands in for all of them.
pub(crate) fn steps_per_period(spec: &ModelSpec, period: usize) -> usize {
    if spec.is_parametric() {
        period
    } else {
        1
    }
}

pub(crate) fn train_steps(cfg: &LearnerConfig, mut state: LearnerState, data: &LabeledDataset, steps: usize) -> Result<LearnerState> {
    for _ in 0..steps {
        state = crate::learners::fit_update(cfg, &state, data)?;
    }
    Ok(state)
}

pub(crate) fn client_round(state: &LearnerState, local: &LabeledDataset, test: &LabeledDataset, bytes_sent: u64, train_size: usize) -> Result<ClientRound> {
    Ok(ClientRound { train_acc: state.accuracy(local)?, test_acc: state.accuracy(test)?, bytes_sent, train_size })
}
