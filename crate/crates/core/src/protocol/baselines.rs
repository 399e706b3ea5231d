use std::time::Instant;

use rayon::prelude::*;

use super::{client_round, steps_per_period, train_steps, ExperimentConfig, ExperimentData, ProtocolKind, RoundRecord, RunOutcome};
use crate::analysis::{communication_cost, CommSpec};
use crate::data::LabelVector;
use crate::learners::{LearnerConfig, LearnerState};
use crate::{Error, Result};

/// Trains every client on its own shard with the same schedule as FedCT but
/// without any communication. Returns one record per communication period.
fn train_isolated(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<(Vec<RoundRecord>, Vec<LearnerState>)> {
    let m = data.num_clients();
    let configs: Vec<LearnerConfig> = (0..m).map(|i| cfg.learner_config(i)).collect();
    let mut states: Vec<LearnerState> =
        configs.iter().map(|c| LearnerState::fresh(c, data.dim(), data.num_classes())).collect();
    let mut records = Vec::new();
    for round in 1..=cfg.communication_rounds() {
        let started = Instant::now();
        states = (0..m)
            .into_par_iter()
            .map(|i| {
                let steps = steps_per_period(&configs[i].model, cfg.period);
                train_steps(&configs[i], states[i].clone(), &data.clients[i], steps).map_err(|e| Error::for_client(i, e))
            })
            .collect::<Result<_>>()?;
        let clients = states
            .iter()
            .zip(&data.clients)
            .map(|(s, local)| client_round(s, local, &data.test, 0, local.len()))
            .collect::<Result<_>>()?;
        records.push(RoundRecord { round, clients, consensus_changes: 0, pool_size: 0, consensus: None, wall_time: started.elapsed() });
    }
    Ok((records, states))
}

/// Each client trains alone for the full budget; no messages are sent.
pub fn run_local_only(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<RunOutcome> {
    cfg.validate(data.num_clients())?;
    data.validate()?;
    let (records, states) = train_isolated(cfg, data)?;
    Ok(RunOutcome { protocol: ProtocolKind::LocalOnly, records, states, final_consensus: None, student: None, student_test_acc: None })
}

/// One model on the union of all client shards, with client 0's learner
/// config and seed. The unlabeled pool is not used.
pub fn run_centralized(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<RunOutcome> {
    cfg.validate(data.num_clients())?;
    data.validate()?;
    let pooled = data.pooled()?;
    let central = ExperimentData { clients: vec![pooled], test: data.test.clone(), unlabeled: data.unlabeled.clone() };
    let mut single = cfg.clone();
    single.learners = vec![cfg.spec_for(0).clone()];
    let (records, states) = train_isolated(&single, &central)?;
    Ok(RunOutcome { protocol: ProtocolKind::Centralized, records, states, final_consensus: None, student: None, student_test_acc: None })
}

#[derive(Debug, Clone)]
pub struct PateOutcome {
    pub teachers: Vec<LearnerState>,
    pub teacher_records: Vec<RoundRecord>,
    pub consensus: LabelVector,
    pub student: LearnerState,
    /// Rows the student was fitted on; always the non-ABSTAIN part of `U`.
    pub student_rows: usize,
    pub student_test_acc: f64,
    pub bytes_sent: u64,
}

impl PateOutcome {
    pub fn into_outcome(self) -> RunOutcome {
        let mut records = self.teacher_records;
        if let Some(last) = records.last_mut() {
            for c in &mut last.clients {
                c.bytes_sent = self.bytes_sent;
            }
            last.pool_size = self.student_rows;
            last.consensus_changes = self.consensus.len() - self.consensus.abstain_count();
            last.consensus = Some(self.consensus.clone());
        }
        RunOutcome {
            protocol: ProtocolKind::Pate,
            records,
            states: self.teachers,
            final_consensus: Some(self.consensus),
            student: Some(self.student),
            student_test_acc: Some(self.student_test_acc),
        }
    }
}

/// One-shot teacher ensemble: teachers train on their shards only, label
/// `U` once by consensus, and a fresh student trains on those labels alone.
pub fn run_pate(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<PateOutcome> {
    cfg.validate(data.num_clients())?;
    data.validate()?;
    let classes = data.num_classes();
    let (teacher_records, teachers) = train_isolated(cfg, data)?;
    let votes: Vec<LabelVector> = teachers
        .iter()
        .enumerate()
        .map(|(i, t)| t.predict_hard(data.unlabeled.view()).map_err(|e| Error::for_client(i, e)))
        .collect::<Result<_>>()?;
    let consensus = cfg.consensus.apply(&votes)?;
    let public = data.unlabeled.pseudo_labeled(&consensus, classes)?;
    if public.is_empty() {
        return Err(Error::invalid("teachers reached no consensus on any unlabeled example"));
    }
    let student_cfg = cfg.student_config();
    let steps = steps_per_period(&student_cfg.model, cfg.period) * cfg.communication_rounds();
    let student = train_steps(&student_cfg, LearnerState::fresh(&student_cfg, data.dim(), classes), &public, steps)?;
    let bytes_sent = communication_cost(&CommSpec {
        protocol: ProtocolKind::Pate,
        u_size: data.unlabeled.len() as u64,
        num_classes: classes as u64,
        parameter_count: 0,
        bits_per_parameter: 32,
        rounds: 1,
        period: 1,
    })
    .total_bytes;
    Ok(PateOutcome {
        student_test_acc: student.accuracy(&data.test)?,
        student_rows: public.len(),
        teachers,
        teacher_records,
        consensus,
        student,
        bytes_sent,
    })
}
