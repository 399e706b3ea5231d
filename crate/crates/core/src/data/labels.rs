use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard labels on the unlabeled pool. `None` is ABSTAIN.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(Vec<Option<usize>>);

impl LabelVector {
    pub fn new(entries: Vec<Option<usize>>) -> Self {
        Self(entries)
    }

    pub fn from_labels(labels: &[usize]) -> Self {
        Self(labels.iter().map(|&y| Some(y)).collect())
    }

    pub fn abstain(len: usize) -> Self {
        Self(vec![None; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, r: usize) -> Option<usize> {
        self.0[r]
    }

    pub fn entries(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<usize>> + '_ {
        self.0.iter().copied()
    }

    pub fn abstain_count(&self) -> usize {
        self.0.iter().filter(|l| l.is_none()).count()
    }

    /// Plain labels; fails on the first ABSTAIN.
    pub fn to_labels(&self) -> Result<Vec<usize>> {
        self.0
            .iter()
            .enumerate()
            .map(|(r, l)| l.ok_or(Error::AbstainPresent(r)))
            .collect()
    }

    /// Number of positions where the two vectors differ (ABSTAIN counts as a value).
    pub fn changes_from(&self, previous: &LabelVector) -> usize {
        self.0.iter().zip(&previous.0).filter(|(a, b)| a != b).count()
    }
}

impl From<Vec<usize>> for LabelVector {
    fn from(labels: Vec<usize>) -> Self {
        Self(labels.into_iter().map(Some).collect())
    }
}

/// Binary `rows × classes` matrix. Strict matrices have exactly one set bit
/// per row; relaxed ones (after noise) may have any number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotMatrix {
    rows: usize,
    classes: usize,
    bits: Vec<bool>,
    relaxed: bool,
}

impl OneHotMatrix {
    /// Builds a relaxed matrix from raw row-major bits.
    pub fn from_bits(rows: usize, classes: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * classes {
            return Err(Error::LengthMismatch { expected: rows * classes, actual: bits.len() });
        }
        Ok(Self { rows, classes, bits, relaxed: true })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.classes + c]
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.classes..(r + 1) * self.classes]
    }

    pub(crate) fn map_bits(&self, mut f: impl FnMut(bool) -> bool) -> Self {
        Self {
            rows: self.rows,
            classes: self.classes,
            bits: self.bits.iter().map(|&b| f(b)).collect(),
            relaxed: true,
        }
    }

    /// True when every row has exactly one set bit, whatever the flag says.
    pub fn rows_are_one_hot(&self) -> bool {
        (0..self.rows).all(|r| self.row(r).iter().filter(|&&b| b).count() == 1)
    }

    /// Row-argmax decoding of a strict matrix.
    pub fn decode(&self) -> Result<LabelVector> {
        if !self.rows_are_one_hot() {
            return Err(Error::invalid("decode requires exactly one set bit per row"));
        }
        Ok(LabelVector::new(
            (0..self.rows).map(|r| self.row(r).iter().position(|&b| b)).collect(),
        ))
    }

    /// Entry-level Hamming distance, the squared Frobenius norm of the XOR.
    pub fn hamming(&self, other: &OneHotMatrix) -> Result<usize> {
        if self.rows != other.rows || self.classes != other.classes {
            return Err(Error::invalid("matrix shapes differ"));
        }
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }
}

/// One-hot encodes `labels` into a strict matrix with `classes` columns.
pub fn one_hot(labels: &LabelVector, classes: usize) -> Result<OneHotMatrix> {
    let mut bits = vec![false; labels.len() * classes];
    for (r, label) in labels.iter().enumerate() {
        let y = label.ok_or(Error::AbstainPresent(r))?;
        if y >= classes {
            return Err(Error::invalid(format!("label {y} outside [0, {classes})")));
        }
        bits[r * classes + y] = true;
    }
    Ok(OneHotMatrix { rows: labels.len(), classes, bits, relaxed: false })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn encodes_rows() {
        let m = one_hot(&LabelVector::from_labels(&[0, 2]), 3).unwrap();
        assert_eq!(m.bits(), &[true, false, false, false, false, true]);
        assert!(!m.is_relaxed());
    }

    #[test]
    fn abstain_is_rejected() {
        let lv = LabelVector::new(vec![Some(1), None]);
        assert!(matches!(one_hot(&lv, 3), Err(Error::AbstainPresent(1))));
    }

    #[test]
    fn changes_count_abstain_transitions() {
        let a = LabelVector::new(vec![Some(0), None, Some(2)]);
        let b = LabelVector::new(vec![Some(0), Some(1), Some(1)]);
        assert_eq!(a.changes_from(&b), 2);
        assert_eq!(b.changes_from(&LabelVector::abstain(3)), 3);
    }

    proptest! {
        #[test]
        fn decode_inverts_one_hot(labels in prop::collection::vec(0usize..5, 0..40)) {
            let lv = LabelVector::from_labels(&labels);
            prop_assert_eq!(one_hot(&lv, 5).unwrap().decode().unwrap(), lv);
        }
    }
}
