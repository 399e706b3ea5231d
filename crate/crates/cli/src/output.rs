//! rounds.csv, summary.json and manifest.json.

use std::path::Path;

use fedct_core::analysis::{communication_cost, run_metrics, CommCost, CommSpec, RoundMetrics};
use fedct_core::protocol::{ExperimentConfig, ExperimentData, ProtocolKind, RoundRecord, RunOutcome};
use serde::{Deserialize, Serialize};

use crate::config::{LoadedConfig, Seeds};
use crate::error::CliResult;

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One line of rounds.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub client_id: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub consensus_changes: usize,
    pub pool_size: usize,
    pub bytes_sent: u64,
}

pub fn rows(records: &[RoundRecord]) -> Vec<RoundRow> {
    records
        .iter()
        .flat_map(|r| {
            r.clients.iter().enumerate().map(move |(i, c)| RoundRow {
                round: r.round,
                client_id: i,
                train_acc: c.train_acc,
                test_acc: c.test_acc,
                consensus_changes: r.consensus_changes,
                pool_size: r.pool_size,
                bytes_sent: c.bytes_sent,
            })
        })
        .collect()
}

pub fn write_rounds(path: &Path, records: &[RoundRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows(records) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rounds(path: &Path) -> CliResult<Vec<RoundRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub protocol: ProtocolKind,
    pub clients: usize,
    pub communication_rounds: usize,
    pub final_mean_test_acc: f64,
    pub final_std_test_acc: f64,
    pub final_client_test_acc: Vec<f64>,
    pub student_test_acc: Option<f64>,
    pub communication: CommCost,
    /// First round from which the consensus never changed again.
    pub consensus_stable_from: Option<usize>,
    pub final_pool_size: usize,
    pub final_consensus_acc: Option<f64>,
    pub wall_seconds: f64,
    pub rounds: Vec<RoundMetrics>,
}

pub fn summary(cfg: &ExperimentConfig, data: &ExperimentData, out: &RunOutcome) -> CliResult<Summary> {
    let metrics = run_metrics(&out.records, &data.unlabeled)?;
    let last = metrics.last().expect("run_metrics rejects empty input");
    let parameter_count = match cfg.protocol {
        ProtocolKind::Fedavg => out.states[0].parameters()?.len() as u64,
        _ => 0,
    };
    let communication = communication_cost(&CommSpec {
        protocol: cfg.protocol,
        u_size: data.unlabeled.len() as u64,
        num_classes: data.num_classes() as u64,
        parameter_count,
        bits_per_parameter: 32,
        rounds: cfg.rounds as u64,
        period: cfg.period as u64,
    });
    let stable = match cfg.protocol {
        ProtocolKind::Fedct | ProtocolKind::DpFedct => {
            let tail = metrics.iter().rev().take_while(|m| m.consensus_changes == 0).count();
            (tail > 0).then(|| metrics[metrics.len() - tail].round)
        }
        _ => None,
    };
    Ok(Summary {
        protocol: cfg.protocol,
        clients: data.num_clients(),
        communication_rounds: out.records.len(),
        final_mean_test_acc: last.mean_test_acc,
        final_std_test_acc: last.std_test_acc,
        final_client_test_acc: out.records.last().map(|r| r.clients.iter().map(|c| c.test_acc).collect()).unwrap_or_default(),
        student_test_acc: out.student_test_acc,
        communication,
        consensus_stable_from: stable,
        final_pool_size: last.pool_size,
        final_consensus_acc: last.consensus_acc,
        wall_seconds: out.records.iter().map(|r| r.wall_time.as_secs_f64()).sum(),
        rounds: metrics,
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config_path: String,
    pub config_digest: String,
    pub version: String,
    pub started_at: String,
    pub outputs: Vec<String>,
    pub seeds: Seeds,
    pub threads: usize,
}

impl Manifest {
    pub fn new(cfg: &LoadedConfig, started_at: String, out_dir: &Path) -> Self {
        Self {
            config_path: cfg.path.display().to_string(),
            config_digest: cfg.digest.clone(),
            version: format!("fedct {}", env!("CARGO_PKG_VERSION")),
            started_at,
            outputs: [ROUNDS_FILE, SUMMARY_FILE, MANIFEST_FILE].iter().map(|f| out_dir.join(f).display().to_string()).collect(),
            seeds: cfg.seeds(),
            threads: rayon::current_num_threads(),
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
