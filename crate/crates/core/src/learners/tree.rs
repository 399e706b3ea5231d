//! CART classification tree with Gini splits.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per node; `None` or `>= d` means all, in column order.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: Vec<usize>,
    },
}

impl Node {
    pub fn counts(&self) -> &[usize] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => counts,
        }
    }
}

/// A candidate split: rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted Gini impurity of the children, `(nL·G(L) + nR·G(R)) / n`.
    pub impurity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    num_classes: usize,
}

/// Gini impurity `1 - Σ p_k²` of a class-count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn sum_sq_over_n(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
}

fn histogram(rows: &[usize], y: &[usize], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Best Gini split of `rows` over `features`, or `None` when no split lowers
/// the impurity. Ties keep the first candidate in feature order, then in
/// ascending threshold order.
pub fn best_split(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    rows: &[usize],
    classes: usize,
    features: &[usize],
) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let total = histogram(rows, y, classes);
    // Maximising Σ_child Σ_k c_k² / n_child is minimising weighted Gini.
    let parent_score = sum_sq_over_n(&total, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = rows.to_vec();
    for &f in features {
        let col = x.column(f);
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut left = vec![0usize; classes];
        let mut left_sq = 0.0f64;
        let mut right = total.clone();
        let mut right_sq: f64 = total.iter().map(|&c| (c * c) as f64).sum();
        for i in 0..n - 1 {
            let k = y[order[i]];
            left_sq += (2 * left[k] + 1) as f64;
            left[k] += 1;
            right_sq -= (2 * right[k] - 1) as f64;
            right[k] -= 1;
            let (lo, hi) = (col[order[i]], col[order[i + 1]]);
            if lo >= hi {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = (n - i - 1) as f64;
            let score = left_sq / nl + right_sq / nr;
            if best.is_none_or(|(s, _, _)| score > s + 1e-12) {
                best = Some((score, f, midpoint(lo, hi)));
            }
        }
    }
    let (score, feature, threshold) = best?;
    if score <= parent_score + 1e-12 {
        return None;
    }
    Some(SplitChoice { feature, threshold, impurity: 1.0 - score / n as f64 })
}

impl DecisionTree {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        y: &[usize],
        rows: &[usize],
        classes: usize,
        params: &TreeParams,
        rng: &mut Rng,
    ) -> Self {
        let mut tree = DecisionTree { nodes: Vec::new(), num_classes: classes };
        tree.grow(x, y, rows.to_vec(), 0, params, rng);
        tree
    }

    fn grow(
        &mut self,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        rows: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        rng: &mut Rng,
    ) -> usize {
        let counts = histogram(&rows, y, self.num_classes);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: counts.clone() });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = params.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || rows.len() < params.min_samples_split.max(2) {
            return id;
        }
        let d = x.ncols();
        let features: Vec<usize> = match params.max_features {
            Some(k) if k < d => {
                let mut f = index::sample(rng, d, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };
        let Some(split) = best_split(x, y, &rows, self.num_classes, &features) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| x[[i, split.feature]] <= split.threshold);
        let left = self.grow(x, y, l, depth + 1, params, rng);
        let right = self.grow(x, y, r, depth + 1, params, rng);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right, counts };
        id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Class counts of the leaf reached by `row`.
    pub fn leaf_counts(&self, row: ArrayView1<'_, f64>) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> usize {
        super::argmax_counts(self.leaf_counts(row))
    }
}
