use std::time::Instant;

use rayon::prelude::*;

use super::{client_round, train_steps, ExperimentConfig, ExperimentData, RoundRecord, RunOutcome};
use crate::analysis::{communication_cost, CommSpec};
use crate::learners::LearnerState;
use crate::{Error, Result};

/// Uniform average of the clients' parameter vectors.
pub fn average_parameters(states: &[LearnerState]) -> Result<Vec<f64>> {
    let first = states.first().ok_or_else(|| Error::invalid("nothing to average"))?.parameters()?;
    let mut sum = vec![0.0; first.len()];
    for s in states {
        let p = s.parameters()?;
        if p.len() != sum.len() {
            return Err(Error::LengthMismatch { expected: sum.len(), actual: p.len() });
        }
        for (acc, v) in sum.iter_mut().zip(&p) {
            *acc += v;
        }
    }
    let m = states.len() as f64;
    Ok(sum.into_iter().map(|v| v / m).collect())
}

/// Federated averaging with equal client weights. All clients start from the
/// initial parameters of client 0's learner and train `period` rounds between
/// averages.
pub fn run_fedavg(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<RunOutcome> {
    cfg.validate(data.num_clients())?;
    data.validate()?;
    let m = data.num_clients();
    let classes = data.num_classes();
    let configs: Vec<_> = (0..m).map(|i| cfg.learner_config(i)).collect();
    let init = LearnerState::fresh(&configs[0], data.dim(), classes).parameters()?;
    let mut states: Vec<LearnerState> = configs
        .iter()
        .map(|c| LearnerState::fresh(c, data.dim(), classes).with_parameters(init.clone()))
        .collect::<Result<_>>()?;
    let bytes = communication_cost(&CommSpec {
        protocol: super::ProtocolKind::Fedavg,
        u_size: 0,
        num_classes: classes as u64,
        parameter_count: init.len() as u64,
        bits_per_parameter: 32,
        rounds: 1,
        period: 1,
    })
    .bytes_per_round;

    let mut records = Vec::with_capacity(cfg.communication_rounds());
    for round in 1..=cfg.communication_rounds() {
        let started = Instant::now();
        let trained: Vec<LearnerState> = (0..m)
            .into_par_iter()
            .map(|i| {
                train_steps(&configs[i], states[i].clone(), &data.clients[i], cfg.period)
                    .map_err(|e| Error::for_client(i, e))
            })
            .collect::<Result<_>>()?;
        let global = average_parameters(&trained)?;
        states = trained.iter().map(|s| s.with_parameters(global.clone())).collect::<Result<_>>()?;
        let clients = states
            .iter()
            .zip(&data.clients)
            .map(|(s, local)| client_round(s, local, &data.test, bytes, local.len()))
            .collect::<Result<_>>()?;
        records.push(RoundRecord {
            round,
            clients,
            consensus_changes: 0,
            pool_size: 0,
            consensus: None,
            wall_time: started.elapsed(),
        });
    }
    Ok(RunOutcome { protocol: cfg.protocol, records, states, final_consensus: None, student: None, student_test_acc: None })
}
