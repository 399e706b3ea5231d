use std::time::Instant;

use rayon::prelude::*;

use super::{client_round, steps_per_period, train_steps, ExperimentConfig, ExperimentData, ProtocolKind, RoundRecord, RunOutcome};
use crate::analysis::{communication_cost, CommSpec};
use crate::data::{one_hot, LabelVector, LabeledDataset};
use crate::learners::LearnerState;
use crate::privacy::{repair_votes, xor_mechanism};
use crate::{Error, Result};

/// Federated co-training.
///
/// Every communication round each client trains on `D^i ∪ P`, predicts hard
/// labels on `U` and sends them (bit-flipped first under dp-fedct; the
/// server repairs each noisy row into one vote). The server forms the
/// consensus, and `P` is replaced by the non-ABSTAIN consensus rows.
pub fn run_fedct(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<RunOutcome> {
    cfg.validate(data.num_clients())?;
    data.validate()?;
    let m = data.num_clients();
    let classes = data.num_classes();
    let u = &data.unlabeled;
    let noise = match cfg.protocol {
        ProtocolKind::DpFedct => cfg.noise,
        _ => None,
    };
    let bytes = communication_cost(&CommSpec {
        protocol: ProtocolKind::Fedct,
        u_size: u.len() as u64,
        num_classes: classes as u64,
        parameter_count: 0,
        bits_per_parameter: 32,
        rounds: 1,
        period: 1,
    })
    .bytes_per_round;

    let configs: Vec<_> = (0..m).map(|i| cfg.learner_config(i)).collect();
    let mut states: Vec<LearnerState> =
        configs.iter().map(|c| LearnerState::fresh(c, data.dim(), classes)).collect();
    let mut previous = LabelVector::abstain(u.len());
    let mut pool: Option<LabeledDataset> = None;
    let mut records = Vec::with_capacity(cfg.communication_rounds());

    for round in 1..=cfg.communication_rounds() {
        let started = Instant::now();
        let results: Vec<(LearnerState, LabelVector, usize)> = (0..m)
            .into_par_iter()
            .map(|i| {
                let local = &data.clients[i];
                let train = match &pool {
                    Some(p) => local.concat(p)?,
                    None => local.clone(),
                };
                let steps = steps_per_period(&configs[i].model, cfg.period);
                let state = train_steps(&configs[i], states[i].clone(), &train, steps)?;
                let labels = state.predict_hard(u.view())?;
                let vote = match noise {
                    Some(n) => {
                        let sent = xor_mechanism(&one_hot(&labels, classes)?, n.flip_prob(), cfg.noise_seed(i, round))?;
                        repair_votes(&sent, cfg.repair_seed(i, round))
                    }
                    None => labels,
                };
                Ok((state, vote, train.len()))
            })
            .collect::<Vec<Result<_>>>()
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| Error::for_client(i, e)))
            .collect::<Result<_>>()?;

        let votes: Vec<LabelVector> = results.iter().map(|r| r.1.clone()).collect();
        let consensus = cfg.consensus.apply(&votes)?;
        let changes = consensus.changes_from(&previous);
        let pool_size = consensus.len() - consensus.abstain_count();

        let mut clients = Vec::with_capacity(m);
        for (i, (state, _, train_size)) in results.into_iter().enumerate() {
            clients.push(client_round(&state, &data.clients[i], &data.test, bytes, train_size)?);
            states[i] = state;
        }
        pool = if pool_size > 0 { Some(u.pseudo_labeled(&consensus, classes)?) } else { None };
        records.push(RoundRecord {
            round,
            clients,
            consensus_changes: changes,
            pool_size,
            consensus: Some(consensus.clone()),
            wall_time: started.elapsed(),
        });
        previous = consensus;
    }

    Ok(RunOutcome {
        protocol: cfg.protocol,
        records,
        states,
        final_consensus: Some(previous),
        student: None,
        student_test_acc: None,
    })
}
