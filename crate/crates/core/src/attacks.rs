//! Membership inference against the two attack surfaces: hard-label queries
//! (what a FedCT client exposes) and model confidences (what a shared model
//! exposes).

use ndarray::ArrayView2;
use serde::Serialize;

use crate::data::{LabelVector, LabeledDataset};
use crate::learners::LearnerState;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult {
    pub auc: f64,
    pub n_members: usize,
    pub n_nonmembers: usize,
    /// Members first, then nonmembers.
    pub scores: Vec<f64>,
}

impl AttackResult {
    fn from_scores(members: Vec<f64>, nonmembers: Vec<f64>) -> Result<Self> {
        let auc = auc(&members, &nonmembers)?;
        let (n_members, n_nonmembers) = (members.len(), nonmembers.len());
        let mut scores = members;
        scores.extend(nonmembers);
        Ok(Self { auc, n_members, n_nonmembers, scores })
    }

    pub fn member_scores(&self) -> &[f64] {
        &self.scores[..self.n_members]
    }

    pub fn nonmember_scores(&self) -> &[f64] {
        &self.scores[self.n_members..]
    }
}

/// `P(member > nonmember) + P(tie) / 2` by exhaustive pairwise comparison.
pub fn auc(members: &[f64], nonmembers: &[f64]) -> Result<f64> {
    if members.is_empty() || nonmembers.is_empty() {
        return Err(Error::invalid("auc needs nonempty member and nonmember scores"));
    }
    // Counted in half-units so the sum stays an exact integer.
    let mut halves: u64 = 0;
    for &a in members {
        for &b in nonmembers {
            halves += match a.partial_cmp(&b) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(halves as f64 / (2 * members.len() * nonmembers.len()) as f64)
}

fn check_queries(members: &LabeledDataset, nonmembers: &LabeledDataset) -> Result<()> {
    if members.is_empty() || nonmembers.is_empty() {
        return Err(Error::invalid("attack needs nonempty member and nonmember sets"));
    }
    if members.dim() != nonmembers.dim() {
        return Err(Error::DimensionMismatch { expected: members.dim(), actual: nonmembers.dim() });
    }
    Ok(())
}

/// Scores each query `(x, y)` by the fraction of clients answering `y`.
pub fn label_query_attack<F>(predictors: &[F], members: &LabeledDataset, nonmembers: &LabeledDataset) -> Result<AttackResult>
where
    F: Fn(ArrayView2<'_, f64>) -> Result<LabelVector>,
{
    check_queries(members, nonmembers)?;
    if predictors.is_empty() {
        return Err(Error::invalid("no predictors to query"));
    }
    let score = |data: &LabeledDataset| -> Result<Vec<f64>> {
        let mut hits = vec![0usize; data.len()];
        for predict in predictors {
            let answers = predict(data.features().view())?;
            if answers.len() != data.len() {
                return Err(Error::LengthMismatch { expected: data.len(), actual: answers.len() });
            }
            for (h, (a, &y)) in hits.iter_mut().zip(answers.iter().zip(data.labels())) {
                *h += (a == Some(y)) as usize;
            }
        }
        Ok(hits.into_iter().map(|h| h as f64 / predictors.len() as f64).collect())
    };
    AttackResult::from_scores(score(members)?, score(nonmembers)?)
}

/// Scores each query `(x, y)` by the model's probability for `y`.
pub fn confidence_threshold_attack(state: &LearnerState, members: &LabeledDataset, nonmembers: &LabeledDataset) -> Result<AttackResult> {
    check_queries(members, nonmembers)?;
    let score = |data: &LabeledDataset| -> Result<Vec<f64>> {
        let probs = state.predict_scores(data.features().view())?;
        Ok(data.labels().iter().enumerate().map(|(r, &y)| probs[[r, y]]).collect())
    };
    AttackResult::from_scores(score(members)?, score(nonmembers)?)
}

/// Averages per-query scores over repeated attack epochs on the same queries
/// and recomputes the AUC.
pub fn average_epochs(epochs: &[AttackResult]) -> Result<AttackResult> {
    let first = epochs.first().ok_or_else(|| Error::invalid("no attack epochs"))?;
    let mut sum = vec![0.0; first.scores.len()];
    for e in epochs {
        if e.n_members != first.n_members || e.n_nonmembers != first.n_nonmembers {
            return Err(Error::LengthMismatch { expected: first.scores.len(), actual: e.scores.len() });
        }
        for (s, v) in sum.iter_mut().zip(&e.scores) {
            *s += v;
        }
    }
    let k = epochs.len() as f64;
    let mean: Vec<f64> = sum.into_iter().map(|s| s / k).collect();
    let (m, n) = mean.split_at(first.n_members);
    AttackResult::from_scores(m.to_vec(), n.to_vec())
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use proptest::prelude::*;

    use super::*;
    use crate::learners::{fit_fresh, LearnerConfig, ModelSpec};

    fn points(labels: &[usize], offset: f64) -> LabeledDataset {
        let x = Array2::from_shape_fn((labels.len(), 1), |(r, _)| r as f64 + offset);
        LabeledDataset::new(x, labels.to_vec(), 2).unwrap()
    }

    #[test]
    fn auc_basics() {
        assert_eq!(auc(&[1.0, 1.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(auc(&[2.0, 3.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(auc(&[1.0, 0.0], &[0.5]).unwrap(), 0.5);
        assert!(auc(&[], &[1.0]).is_err());
        assert!(auc(&[1.0], &[]).is_err());
    }

    #[test]
    fn always_correct_clients_give_chance_auc() {
        let members = points(&[0, 1, 1], 0.0);
        let nonmembers = points(&[1, 0], 10.0);
        let oracle_m = members.clone();
        let oracle_n = nonmembers.clone();
        let truth = move |x: ArrayView2<'_, f64>| -> Result<LabelVector> {
            let labels = x
                .rows()
                .into_iter()
                .map(|r| if r[0] >= 10.0 { oracle_n.labels()[(r[0] - 10.0) as usize] } else { oracle_m.labels()[r[0] as usize] })
                .collect::<Vec<_>>();
            Ok(LabelVector::from_labels(&labels))
        };
        let res = label_query_attack(&[&truth, &truth], &members, &nonmembers).unwrap();
        assert!(res.scores.iter().all(|&s| s == 1.0));
        assert_eq!(res.auc, 0.5);
    }

    #[test]
    fn memorizing_clients_give_perfect_auc() {
        let members = points(&[0, 1, 1], 0.0);
        let nonmembers = points(&[1, 0], 10.0);
        let labels_m = members.labels().to_vec();
        let labels_n = nonmembers.labels().to_vec();
        let memorizer = move |x: ArrayView2<'_, f64>| -> Result<LabelVector> {
            let labels = x
                .rows()
                .into_iter()
                .map(|r| if r[0] >= 10.0 { 1 - labels_n[(r[0] - 10.0) as usize] } else { labels_m[r[0] as usize] })
                .collect::<Vec<_>>();
            Ok(LabelVector::from_labels(&labels))
        };
        let res = label_query_attack(&[memorizer], &members, &nonmembers).unwrap();
        assert_eq!(res.auc, 1.0);
        assert_eq!(res.member_scores(), &[1.0, 1.0, 1.0]);
        assert_eq!(res.nonmember_scores(), &[0.0, 0.0]);
    }

    #[test]
    fn dummy_model_confidence_is_chance() {
        let train = points(&[0, 1, 0, 1], 0.0);
        let state = fit_fresh(&LearnerConfig::new(ModelSpec::DummyMajority, 0), &train).unwrap();
        let res = confidence_threshold_attack(&state, &train, &points(&[1, 0], 10.0)).unwrap();
        assert_eq!(res.auc, 0.5);
    }

    #[test]
    fn overfit_tree_confidence_separates() {
        // members memorized exactly; nonmembers sit on the same points with
        // flipped labels, so the tree is confidently wrong on them
        let members = points(&[0, 1, 0, 1, 1, 0], 0.0);
        let flipped: Vec<usize> = members.labels().iter().map(|y| 1 - y).collect();
        let nonmembers = points(&flipped, 0.0);
        let spec = ModelSpec::DecisionTree { max_depth: None, min_samples_split: 2 };
        let state = fit_fresh(&LearnerConfig::new(spec, 0), &members).unwrap();
        assert_eq!(confidence_threshold_attack(&state, &members, &nonmembers).unwrap().auc, 1.0);
    }

    #[test]
    fn epochs_average_scores() {
        let a = AttackResult::from_scores(vec![1.0], vec![0.0]).unwrap();
        let b = AttackResult::from_scores(vec![0.0], vec![1.0]).unwrap();
        let avg = average_epochs(&[a.clone(), b]).unwrap();
        assert_eq!(avg.scores, vec![0.5, 0.5]);
        assert_eq!(avg.auc, 0.5);
        assert_eq!(average_epochs(std::slice::from_ref(&a)).unwrap(), a);
        assert!(average_epochs(&[]).is_err());
    }

    #[test]
    fn empty_queries_rejected() {
        let empty = LabeledDataset::new(Array2::zeros((0, 1)), vec![], 2);
        if let Ok(empty) = empty {
            let state = fit_fresh(&LearnerConfig::new(ModelSpec::DummyMajority, 0), &points(&[0, 1], 0.0)).unwrap();
            assert!(confidence_threshold_attack(&state, &empty, &points(&[0], 0.0)).is_err());
        }
    }

    proptest! {
        #[test]
        fn auc_is_antisymmetric(
            a in prop::collection::vec(0u8..6, 1..20),
            b in prop::collection::vec(0u8..6, 1..20),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            prop_assert_eq!(auc(&a, &b).unwrap() + auc(&b, &a).unwrap(), 1.0);
        }

        #[test]
        fn auc_ignores_monotone_transforms(
            a in prop::collection::vec(-5.0f64..5.0, 1..20),
            b in prop::collection::vec(-5.0f64..5.0, 1..20),
        ) {
            let f = |v: &[f64]| v.iter().map(|x| x.exp() * 3.0 + 1.0).collect::<Vec<_>>();
            prop_assert_eq!(auc(&a, &b).unwrap(), auc(&f(&a), &f(&b)).unwrap());
        }

        #[test]
        fn label_scores_are_vote_fractions(m in 1usize..6, seed in 0u64..50) {
            let members = points(&[0, 1, 1, 0], 0.0);
            let nonmembers = points(&[1, 1], 10.0);
            let predictors: Vec<_> = (0..m)
                .map(|i| move |x: ArrayView2<'_, f64>| -> Result<LabelVector> {
                    let labels: Vec<usize> = x.rows().into_iter()
                        .map(|r| ((r[0] as u64 ^ seed).wrapping_add(i as u64) % 2) as usize)
                        .collect();
                    Ok(LabelVector::from_labels(&labels))
                })
                .collect();
            let res = label_query_attack(&predictors, &members, &nonmembers).unwrap();
            for s in res.scores {
                let k = s * m as f64;
                prop_assert!((k - k.round()).abs() < 1e-9 && (0.0..=1.0).contains(&s));
            }
        }
    }
}
