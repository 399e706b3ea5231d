//! Multinomial logistic regression.
//!
//! Parameters are one flat vector: the `C × d` weight matrix in row-major
//! order followed by the `C` biases.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::sgd::{cross_entropy_delta, softmax_rows};

pub fn parameter_count(dim: usize, classes: usize) -> usize {
    classes * dim + classes
}

fn split(params: &[f64], dim: usize, classes: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
    let (w, b) = params.split_at(classes * dim);
    (
        ArrayView2::from_shape((classes, dim), w).expect("parameter layout"),
        ArrayView1::from(b),
    )
}

pub fn probabilities(params: &[f64], dim: usize, classes: usize, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let (w, b) = split(params, dim, classes);
    softmax_rows(x.dot(&w.t()) + b)
}

/// Mean cross-entropy plus `l2/2 · ‖W‖²` (biases unpenalised), and its gradient.
pub fn loss_and_gradient(
    params: &[f64],
    dim: usize,
    classes: usize,
    l2: f64,
    x: ArrayView2<'_, f64>,
    y: &[usize],
) -> (f64, Vec<f64>) {
    let probs = probabilities(params, dim, classes, x);
    let (mut loss, delta) = cross_entropy_delta(&probs, y);
    let (w, _) = split(params, dim, classes);
    let grad_w = delta.t().dot(&x) + &(&w * l2);
    let grad_b = delta.sum_axis(Axis(0));
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    let mut grad: Vec<f64> = grad_w.iter().copied().collect();
    grad.extend(grad_b.iter());
    (loss, grad)
}
