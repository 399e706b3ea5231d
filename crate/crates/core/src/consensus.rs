//! Server-side aggregation of client label vectors.

use serde::{Deserialize, Serialize};

use crate::data::LabelVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConsensusSpec {
    Majority,
    QualifiedMajority { quorum: f64 },
}

impl ConsensusSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConsensusSpec::QualifiedMajority { quorum } if !(quorum > 0.5 && quorum <= 1.0) => {
                Err(Error::config("quorum", format!("must lie in (0.5, 1], got {quorum}")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, votes: &[LabelVector]) -> Result<LabelVector> {
        match *self {
            ConsensusSpec::Majority => majority_vote(votes),
            ConsensusSpec::QualifiedMajority { quorum } => qualified_majority(votes, quorum),
        }
    }
}

/// Per-entry (top class, its count). Ties go to the lowest class index.
fn tally(votes: &[LabelVector]) -> Result<Vec<(usize, usize)>> {
    let first = votes.first().ok_or_else(|| Error::invalid("consensus needs at least one vote"))?;
    let len = first.len();
    for v in votes {
        if v.len() != len {
            return Err(Error::LengthMismatch { expected: len, actual: v.len() });
        }
    }
    let mut counts: Vec<usize> = Vec::new();
    (0..len)
        .map(|r| {
            counts.clear();
            for v in votes {
                let y = v.get(r).ok_or(Error::AbstainPresent(r))?;
                if y >= counts.len() {
                    counts.resize(y + 1, 0);
                }
                counts[y] += 1;
            }
            let mut top = 0;
            for (k, &c) in counts.iter().enumerate() {
                if c > counts[top] {
                    top = k;
                }
            }
            Ok((top, counts[top]))
        })
        .collect()
}

/// Most frequent class per entry; never ABSTAIN.
pub fn majority_vote(votes: &[LabelVector]) -> Result<LabelVector> {
    Ok(LabelVector::new(tally(votes)?.into_iter().map(|(top, _)| Some(top)).collect()))
}

/// Number of agreeing votes a qualified majority needs among `m` clients.
pub fn quorum_threshold(quorum: f64, m: usize) -> usize {
    // Guard against q·m landing a hair above an integer, e.g. 0.9·10.
    let raw = quorum * m as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Top class per entry if it reaches `ceil(q·m)` votes, otherwise ABSTAIN.
pub fn qualified_majority(votes: &[LabelVector], quorum: f64) -> Result<LabelVector> {
    if !(quorum > 0.5 && quorum <= 1.0) {
        return Err(Error::config("quorum", format!("must lie in (0.5, 1], got {quorum}")));
    }
    let need = quorum_threshold(quorum, votes.len());
    Ok(LabelVector::new(
        tally(votes)?.into_iter().map(|(top, count)| (count >= need).then_some(top)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn columns(entries: &[&[usize]]) -> Vec<LabelVector> {
        // entries[r] holds the m votes for row r; transpose to per-client vectors.
        let m = entries[0].len();
        (0..m).map(|i| LabelVector::from_labels(&entries.iter().map(|e| e[i]).collect::<Vec<_>>())).collect()
    }

    #[test]
    fn simple_majority() {
        let votes = columns(&[&[0, 0, 1], &[2, 2, 2]]);
        assert_eq!(majority_vote(&votes).unwrap(), LabelVector::from_labels(&[0, 2]));
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let votes = columns(&[&[2, 1, 2, 1]]);
        assert_eq!(majority_vote(&votes).unwrap().get(0), Some(1));
    }

    #[test]
    fn quorum_examples() {
        let nine: Vec<usize> = std::iter::repeat_n(2, 9).chain([0]).collect();
        let eight: Vec<usize> = std::iter::repeat_n(2, 8).chain([0, 0]).collect();
        assert_eq!(qualified_majority(&columns(&[&nine]), 0.9).unwrap().get(0), Some(2));
        assert_eq!(qualified_majority(&columns(&[&eight]), 0.9).unwrap().get(0), None);
        assert_eq!(quorum_threshold(0.9, 10), 9);
        assert_eq!(quorum_threshold(0.5000001, 2), 2);
        assert_eq!(quorum_threshold(1.0, 7), 7);
        assert_eq!(qualified_majority(&columns(&[&[1, 0]]), 0.51).unwrap().get(0), None);
        assert_eq!(qualified_majority(&columns(&[&[1, 1]]), 0.51).unwrap().get(0), Some(1));
    }

    #[test]
    fn contract_errors() {
        let a = LabelVector::from_labels(&[0, 1]);
        let b = LabelVector::from_labels(&[0]);
        assert!(matches!(majority_vote(&[a.clone(), b]), Err(Error::LengthMismatch { .. })));
        assert!(majority_vote(&[]).is_err());
        let abstaining = LabelVector::new(vec![Some(0), None]);
        assert!(matches!(majority_vote(&[a.clone(), abstaining]), Err(Error::AbstainPresent(1))));
        let err = qualified_majority(&[a], 0.4).unwrap_err();
        assert!(err.to_string().contains("quorum"));
    }

    fn votes_strategy() -> impl Strategy<Value = Vec<Vec<usize>>> {
        (1usize..8, 1usize..20).prop_flat_map(|(m, len)| prop::collection::vec(prop::collection::vec(0usize..4, len), m))
    }

    proptest! {
        #[test]
        fn permutation_invariant(raw in votes_strategy(), seed: u64) {
            use rand::seq::SliceRandom;
            let votes: Vec<LabelVector> = raw.iter().map(|v| LabelVector::from_labels(v)).collect();
            let mut shuffled = votes.clone();
            shuffled.shuffle(&mut crate::rng::rng_from(seed));
            prop_assert_eq!(majority_vote(&votes).unwrap(), majority_vote(&shuffled).unwrap());
            prop_assert_eq!(qualified_majority(&votes, 0.7).unwrap(), qualified_majority(&shuffled, 0.7).unwrap());
        }

        #[test]
        fn quorum_only_withholds(raw in votes_strategy(), q in 0.5001f64..1.0) {
            let votes: Vec<LabelVector> = raw.iter().map(|v| LabelVector::from_labels(v)).collect();
            let maj = majority_vote(&votes).unwrap();
            let qm = qualified_majority(&votes, q).unwrap();
            for r in 0..maj.len() {
                prop_assert!(qm.get(r).is_none() || qm.get(r) == maj.get(r));
            }
        }

        #[test]
        fn raising_quorum_never_adds_labels(raw in votes_strategy(), a in 0.5001f64..1.0, b in 0.5001f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let votes: Vec<LabelVector> = raw.iter().map(|v| LabelVector::from_labels(v)).collect();
            let low = qualified_majority(&votes, lo).unwrap();
            let high = qualified_majority(&votes, hi).unwrap();
            for r in 0..low.len() {
                prop_assert!(!(low.get(r).is_none() && high.get(r).is_some()));
            }
        }
    }
}
