use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use rayon::prelude::*;

use super::tree::{DecisionTree, TreeParams};
use crate::rng::derived_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    num_classes: usize,
}

impl RandomForest {
    /// Trees are grown independently, each from its own derived stream, so
    /// the result does not depend on the worker count.
    pub fn fit(
        x: ArrayView2<'_, f64>,
        y: &[usize],
        classes: usize,
        n_trees: usize,
        bootstrap: bool,
        params: &TreeParams,
        seed: u64,
    ) -> Self {
        let n = y.len();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = derived_rng(seed, &[t as u64]);
                let rows: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(x, y, &rows, classes, params, &mut rng)
            })
            .collect();
        Self { trees, num_classes: classes }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn votes(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut votes = Array2::zeros((x.nrows(), self.num_classes));
        for (r, row) in x.outer_iter().enumerate() {
            for tree in &self.trees {
                votes[[r, tree.predict_row(row)]] += 1.0;
            }
        }
        votes
    }
}
