use serde::Serialize;

use crate::data::UnlabeledDataset;
use crate::protocol::RoundRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub mean_test_acc: f64,
    /// Population standard deviation over clients.
    pub std_test_acc: f64,
    /// Accuracy of the non-ABSTAIN consensus entries against the hidden
    /// labels of `U`, when both are available.
    pub consensus_acc: Option<f64>,
    pub consensus_changes: usize,
    pub pool_size: usize,
}

pub fn run_metrics(records: &[RoundRecord], unlabeled: &UnlabeledDataset) -> Result<Vec<RoundMetrics>> {
    if records.is_empty() {
        return Err(Error::invalid("no round records"));
    }
    let truth = unlabeled.hidden_truth();
    records
        .iter()
        .map(|r| {
            if r.clients.is_empty() {
                return Err(Error::invalid(format!("round {} has no clients", r.round)));
            }
            let n = r.clients.len() as f64;
            let mean = r.mean_test_acc();
            // shifted by the first client so equal accuracies give exactly 0
            let shift = r.clients[0].test_acc;
            let dev: Vec<f64> = r.clients.iter().map(|c| c.test_acc - shift).collect();
            let dev_mean = dev.iter().sum::<f64>() / n;
            let var = dev.iter().map(|d| (d - dev_mean).powi(2)).sum::<f64>() / n;
            let consensus_acc = match (truth, &r.consensus) {
                (Some(t), Some(c)) => {
                    if c.len() != t.len() {
                        return Err(Error::LengthMismatch { expected: t.len(), actual: c.len() });
                    }
                    let (hit, voted) = c
                        .iter()
                        .zip(t)
                        .filter_map(|(v, &y)| v.map(|v| v == y))
                        .fold((0usize, 0usize), |(h, n), ok| (h + ok as usize, n + 1));
                    (voted > 0).then(|| hit as f64 / voted as f64)
                }
                _ => None,
            };
            Ok(RoundMetrics {
                round: r.round,
                mean_test_acc: mean,
                std_test_acc: var.sqrt(),
                consensus_acc,
                consensus_changes: r.consensus_changes,
                pool_size: r.pool_size,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use ndarray::Array2;

    use super::*;
    use crate::data::LabelVector;
    use crate::protocol::ClientRound;

    fn record(accs: &[f64], consensus: Option<LabelVector>) -> RoundRecord {
        RoundRecord {
            round: 1,
            clients: accs.iter().map(|&a| ClientRound { train_acc: a, test_acc: a, bytes_sent: 0, train_size: 1 }).collect(),
            consensus_changes: 2,
            pool_size: 3,
            consensus,
            wall_time: Duration::ZERO,
        }
    }

    #[test]
    fn identical_accuracies_have_zero_spread() {
        let u = UnlabeledDataset::new(Array2::zeros((3, 1)));
        let m = run_metrics(&[record(&[0.7, 0.7, 0.7], None)], &u).unwrap();
        assert_eq!(m[0].std_test_acc, 0.0);
        assert!((m[0].mean_test_acc - 0.7).abs() < 1e-12);
        assert_eq!(m[0].consensus_acc, None);
    }

    #[test]
    fn spread_is_population_std() {
        let u = UnlabeledDataset::new(Array2::zeros((1, 1)));
        let m = run_metrics(&[record(&[0.0, 1.0], None)], &u).unwrap();
        assert!((m[0].std_test_acc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn consensus_accuracy_against_truth() {
        let u = UnlabeledDataset::with_truth(Array2::zeros((4, 1)), vec![0, 1, 1, 0], 2).unwrap();
        let exact = LabelVector::from_labels(&[0, 1, 1, 0]);
        assert_eq!(run_metrics(&[record(&[1.0], Some(exact))], &u).unwrap()[0].consensus_acc, Some(1.0));
        let partial = LabelVector::new(vec![Some(0), None, Some(0), None]);
        assert_eq!(run_metrics(&[record(&[1.0], Some(partial))], &u).unwrap()[0].consensus_acc, Some(0.5));
        assert!(run_metrics(&[], &u).is_err());
    }
}
