//! Shared pieces of the gradient-trained learners.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::rng::derived_rng;

pub const MAX_BATCH: usize = 32;

/// Row-wise softmax, shifted by the row max.
pub fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.outer_iter_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    logits
}

/// Mean cross-entropy of `probs` against `y`, and `probs - onehot(y)` scaled by `1/n`.
pub fn cross_entropy_delta(probs: &Array2<f64>, y: &[usize]) -> (f64, Array2<f64>) {
    let n = y.len() as f64;
    let mut delta = probs.clone();
    let mut loss = 0.0;
    for (r, &k) in y.iter().enumerate() {
        loss -= probs[[r, k]].max(1e-300).ln();
        delta[[r, k]] -= 1.0;
    }
    delta.mapv_inplace(|v| v / n);
    (loss / n, delta)
}

/// Runs `epochs` passes of mini-batch gradient descent with batch size
/// `min(32, n)`. The shuffle of epoch `e` is seeded by `(seed, e)`, with `e`
/// counted from `first_epoch`, so resumed training continues the same
/// schedule.
#[allow(clippy::too_many_arguments)]
pub fn minibatch_descent<G>(
    params: &mut [f64],
    x: ArrayView2<'_, f64>,
    y: &[usize],
    learning_rate: f64,
    first_epoch: u64,
    epochs: usize,
    seed: u64,
    gradient: G,
) where
    G: Fn(&[f64], ArrayView2<'_, f64>, &[usize]) -> (f64, Vec<f64>),
{
    let n = y.len();
    let batch = MAX_BATCH.min(n);
    for e in 0..epochs as u64 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut derived_rng(seed, &[0xe90c, first_epoch + e]));
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (_, grad) = gradient(params, xb.view(), &yb);
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= learning_rate * g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn softmax_rows_normalise() {
        let p = softmax_rows(array![[1000.0, 1000.0], [0.0, -3.0], [-5.0, 7.0]]);
        for row in p.outer_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert_eq!(p[[0, 0]], 0.5);
    }
}
