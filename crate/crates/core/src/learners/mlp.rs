//! One-hidden-layer perceptron: ReLU hidden units, softmax output.
//!
//! Flat parameter layout: `W1 (h × d)`, `b1 (h)`, `W2 (C × h)`, `b2 (C)`.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;

use super::sgd::{cross_entropy_delta, softmax_rows};
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub dim: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Shape {
    pub fn parameter_count(&self) -> usize {
        self.hidden * self.dim + self.hidden + self.classes * self.hidden + self.classes
    }
}

struct Layers<'a> {
    w1: ArrayView2<'a, f64>,
    b1: ArrayView1<'a, f64>,
    w2: ArrayView2<'a, f64>,
    b2: ArrayView1<'a, f64>,
}

fn layers(params: &[f64], s: Shape) -> Layers<'_> {
    let (w1, rest) = params.split_at(s.hidden * s.dim);
    let (b1, rest) = rest.split_at(s.hidden);
    let (w2, b2) = rest.split_at(s.classes * s.hidden);
    Layers {
        w1: ArrayView2::from_shape((s.hidden, s.dim), w1).expect("parameter layout"),
        b1: ArrayView1::from(b1),
        w2: ArrayView2::from_shape((s.classes, s.hidden), w2).expect("parameter layout"),
        b2: ArrayView1::from(b2),
    }
}

/// Glorot-uniform weights from the learner seed, zero biases.
pub fn initial_parameters(s: Shape, seed: u64) -> Vec<f64> {
    let mut rng = derived_rng(seed, &[0x1417]);
    let mut params = Vec::with_capacity(s.parameter_count());
    let limit1 = (6.0 / (s.dim + s.hidden) as f64).sqrt();
    params.extend((0..s.hidden * s.dim).map(|_| rng.random_range(-limit1..limit1)));
    params.extend(std::iter::repeat_n(0.0, s.hidden));
    let limit2 = (6.0 / (s.hidden + s.classes) as f64).sqrt();
    params.extend((0..s.classes * s.hidden).map(|_| rng.random_range(-limit2..limit2)));
    params.extend(std::iter::repeat_n(0.0, s.classes));
    params
}

fn hidden(l: &Layers<'_>, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
    let pre = x.dot(&l.w1.t()) + l.b1;
    let act = pre.mapv(|v| v.max(0.0));
    (pre, act)
}

pub fn probabilities(params: &[f64], s: Shape, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let l = layers(params, s);
    let (_, act) = hidden(&l, x);
    softmax_rows(act.dot(&l.w2.t()) + l.b2)
}

/// Mean cross-entropy and its gradient by backpropagation.
pub fn loss_and_gradient(params: &[f64], s: Shape, x: ArrayView2<'_, f64>, y: &[usize]) -> (f64, Vec<f64>) {
    let l = layers(params, s);
    let (pre, act) = hidden(&l, x);
    let probs = softmax_rows(act.dot(&l.w2.t()) + l.b2);
    let (loss, delta_out) = cross_entropy_delta(&probs, y);

    let grad_w2 = delta_out.t().dot(&act);
    let grad_b2 = delta_out.sum_axis(Axis(0));
    let mut delta_hidden = delta_out.dot(&l.w2);
    delta_hidden.zip_mut_with(&pre, |d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
    let grad_w1 = delta_hidden.t().dot(&x);
    let grad_b1 = delta_hidden.sum_axis(Axis(0));

    let mut grad = Vec::with_capacity(params.len());
    grad.extend(grad_w1.iter());
    grad.extend(grad_b1.iter());
    grad.extend(grad_w2.iter());
    grad.extend(grad_b2.iter());
    (loss, grad)
}
