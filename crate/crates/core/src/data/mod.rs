//! Datasets, splits and client partitioning.

mod csv_io;
mod labels;
mod split;
mod synth;

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::{Error, Result};

pub use csv_io::load_csv;
pub use labels::{one_hot, LabelVector, OneHotMatrix};
pub use split::{
    dirichlet_assignment, iid_assignment, largest_remainder, partition_dirichlet, partition_iid,
    split_indices, split_train_test_unlabeled, PartitionScheme, PartitionSpec,
};
pub use synth::make_blobs;

/// Feature matrix with integer class labels in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    label_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(format!("num_classes must be >= 2, got {num_classes}")));
        }
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch { expected: features.nrows(), actual: labels.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::invalid(format!("label {bad} outside [0, {num_classes})")));
        }
        Ok(Self { features, labels, num_classes, label_names: None })
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Self {
        self.label_names = Some(names);
        self
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Original label strings, indexed by encoded class, when loaded from a file.
    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            label_names: self.label_names.clone(),
        }
    }

    /// Row-wise union; `other` must agree on dimension and class count.
    pub fn concat(&self, other: &LabeledDataset) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        if other.num_classes != self.num_classes {
            return Err(Error::invalid("class count differs between datasets"));
        }
        let features = concatenate(Axis(0), &[self.features.view(), other.features.view()])
            .expect("column counts checked");
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Self { features, labels, num_classes: self.num_classes, label_names: self.label_names.clone() })
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.num_classes];
        for &y in &self.labels {
            hist[y] += 1;
        }
        hist
    }

    /// Drops the labels; they are kept as hidden ground truth.
    pub fn into_unlabeled(self) -> UnlabeledDataset {
        UnlabeledDataset { features: self.features, hidden_truth: Some(self.labels) }
    }
}

/// Public pool `U`. Ground truth, when known, is kept for evaluation and is
/// not reachable from outside the crate except through the metrics layer.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataset {
    features: Array2<f64>,
    hidden_truth: Option<Vec<usize>>,
}

impl UnlabeledDataset {
    pub fn new(features: Array2<f64>) -> Self {
        Self { features, hidden_truth: None }
    }

    pub fn with_truth(features: Array2<f64>, truth: Vec<usize>, num_classes: usize) -> Result<Self> {
        if truth.len() != features.nrows() {
            return Err(Error::LengthMismatch { expected: features.nrows(), actual: truth.len() });
        }
        if let Some(&bad) = truth.iter().find(|&&y| y >= num_classes) {
            return Err(Error::invalid(format!("hidden label {bad} outside [0, {num_classes})")));
        }
        Ok(Self { features, hidden_truth: Some(truth) })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn has_truth(&self) -> bool {
        self.hidden_truth.is_some()
    }

    pub(crate) fn hidden_truth(&self) -> Option<&[usize]> {
        self.hidden_truth.as_deref()
    }

    /// Pairs the rows of `U` that carry a label in `labels` into a labeled
    /// dataset. ABSTAIN rows are skipped.
    pub fn pseudo_labeled(&self, labels: &LabelVector, num_classes: usize) -> Result<LabeledDataset> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: labels.len() });
        }
        let (rows, ys): (Vec<usize>, Vec<usize>) =
            labels.iter().enumerate().filter_map(|(r, l)| l.map(|y| (r, y))).unzip();
        LabeledDataset::new(self.features.select(Axis(0), &rows), ys, num_classes)
    }
}
