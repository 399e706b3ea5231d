//! Differential privacy for shared label matrices.
//!
//! Client predictions on `U` are one-hot encoded and every bit is flipped
//! independently with probability `p` (XOR with an i.i.d. Bernoulli matrix).
//! If neighbouring training sets change at most `s*` bits of the matrix,
//! the mechanism is `ε`-DP with `ε = s* · ln((1-p)/p)`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::probit;
use crate::data::{one_hot, LabelVector, LabeledDataset, OneHotMatrix, UnlabeledDataset};
use crate::learners::{fit_fresh, LearnerConfig};
use crate::rng::{derived_rng, rng_from};
use crate::{Error, Result};

/// Per-bit flip probability `1 / (1 + exp(ε/s*))` for budget `ε` and
/// entry-level sensitivity `s*`.
pub fn flip_probability(epsilon: f64, sensitivity: u64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if sensitivity == 0 {
        return Err(Error::invalid("sensitivity must be at least 1"));
    }
    Ok(1.0 / (1.0 + (epsilon / sensitivity as f64).exp()))
}

/// Budget `s* · ln((1-p)/p)` spent by flip probability `p ∈ (0, 1/2)`.
pub fn epsilon_for(p: f64, sensitivity: u64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::invalid(format!("flip probability must lie in (0, 0.5), got {p}")));
    }
    if sensitivity == 0 {
        return Err(Error::invalid("sensitivity must be at least 1"));
    }
    Ok(sensitivity as f64 * ((1.0 - p) / p).ln())
}

/// DP budget, sensitivity and the flip probability they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    epsilon: f64,
    sensitivity: u64,
    flip_prob: f64,
}

impl NoiseSpec {
    pub fn from_budget(epsilon: f64, sensitivity: u64) -> Result<Self> {
        Ok(Self { epsilon, sensitivity, flip_prob: flip_probability(epsilon, sensitivity)? })
    }

    /// Noise given directly as a flip probability in `[0, 1/2)`. `p = 0`
    /// means no noise and an infinite budget.
    pub fn from_flip_prob(flip_prob: f64, sensitivity: u64) -> Result<Self> {
        let epsilon = if flip_prob == 0.0 { f64::INFINITY } else { epsilon_for(flip_prob, sensitivity)? };
        if sensitivity == 0 {
            return Err(Error::invalid("sensitivity must be at least 1"));
        }
        Ok(Self { epsilon, sensitivity, flip_prob })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> u64 {
        self.sensitivity
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }
}

/// XORs `matrix` with i.i.d. Bernoulli(`p`) bits. The output is relaxed.
pub fn xor_mechanism(matrix: &OneHotMatrix, p: f64, seed: u64) -> Result<OneHotMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("flip probability must lie in [0, 1], got {p}")));
    }
    let mut rng = rng_from(seed);
    Ok(matrix.map_bits(|b| b ^ (rng.random::<f64>() < p)))
}

/// Server-side decoding of a noisy matrix into one vote per row: a uniform
/// choice among the set bits, or a uniform class when none is set.
pub fn repair_votes(noisy: &OneHotMatrix, seed: u64) -> LabelVector {
    let mut rng = rng_from(seed);
    let classes = noisy.classes();
    LabelVector::new(
        (0..noisy.rows())
            .map(|r| {
                let set: Vec<usize> = noisy.row(r).iter().enumerate().filter(|(_, &b)| b).map(|(c, _)| c).collect();
                Some(match set.len() {
                    0 => rng.random_range(0..classes),
                    1 => set[0],
                    n => set[rng.random_range(0..n)],
                })
            })
            .collect(),
    )
}

/// Exact `ln P(output | input)` under independent flips with probability `p`.
pub fn log_output_probability(input: &OneHotMatrix, output: &OneHotMatrix, p: f64) -> Result<f64> {
    let flips = input.hamming(output)?;
    let keeps = input.bits().len() - flips;
    Ok(flips as f64 * p.ln() + keeps as f64 * (1.0 - p).ln())
}

/// Upper bound on the number of changed predictions on `n` unlabeled
/// points for a learner with replace-one stability rate `rate`, holding
/// with probability `1 - delta`:
/// `ceil(n·r + P·sqrt(n·r·(1-r)) + P²/3)` with `P = probit(1 - delta)`.
pub fn sensitivity_bound(n: u64, rate: f64, delta: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("stability rate must lie in [0, 1), got {rate}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if rate == 0.0 {
        // Binomial(n, 0) is degenerate at zero; its quantile is exact.
        return Ok(0);
    }
    let p = probit(1.0 - delta)?;
    let mean = n as f64 * rate;
    let value = mean + p * (mean * (1.0 - rate)).sqrt() + p * p / 3.0;
    Ok(value.ceil().max(0.0) as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Largest number of unlabeled examples whose predicted label changed.
    pub row_hamming_max: usize,
    /// Largest number of differing one-hot bits.
    pub entry_hamming_max: usize,
    pub samples: usize,
    /// Changed rows per trial.
    pub trial_rows: Vec<usize>,
}

/// Changed rows and changed one-hot bits between the predictions on `u` of
/// models trained on `a` and `b` under the same config.
pub fn prediction_change(
    cfg: &LearnerConfig,
    a: &LabeledDataset,
    b: &LabeledDataset,
    u: &UnlabeledDataset,
) -> Result<(usize, usize)> {
    let pa = fit_fresh(cfg, a)?.predict_hard(u.view())?;
    let pb = fit_fresh(cfg, b)?.predict_hard(u.view())?;
    compare_predictions(&pa, &pb, a.num_classes())
}

fn compare_predictions(pa: &LabelVector, pb: &LabelVector, classes: usize) -> Result<(usize, usize)> {
    let rows = pa.changes_from(pb);
    let entries = one_hot(pa, classes)?.hamming(&one_hot(pb, classes)?)?;
    Ok((rows, entries))
}

/// Replace-one neighbour of `data`: row `i` is swapped for a resampled row
/// with Gaussian feature noise at 10% of each feature's standard deviation
/// and a uniformly drawn label.
pub fn replace_one_neighbor(data: &LabeledDataset, rng: &mut crate::rng::Rng) -> LabeledDataset {
    let n = data.len();
    let x = data.features();
    let std: Array1<f64> = x.std_axis(Axis(0), 0.0);
    let victim = rng.random_range(0..n);
    let source = rng.random_range(0..n);
    let mut row = x.row(source).to_owned();
    for (v, s) in row.iter_mut().zip(std.iter()) {
        let sd = 0.1 * s;
        if sd > 0.0 {
            *v += Normal::new(0.0, sd).expect("positive sd").sample(rng);
        }
    }
    let mut features: Array2<f64> = x.clone();
    features.row_mut(victim).assign(&row);
    let mut labels = data.labels().to_vec();
    labels[victim] = rng.random_range(0..data.num_classes());
    LabeledDataset::new(features, labels, data.num_classes()).expect("shape preserved")
}

/// Monte-Carlo sensitivity estimate over `k` replace-one neighbours. Trials
/// run in parallel, each from its own derived seed.
pub fn estimate_sensitivity(
    cfg: &LearnerConfig,
    data: &LabeledDataset,
    u: &UnlabeledDataset,
    k: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    if k == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if data.len() < 2 {
        return Err(Error::invalid("need at least two training examples"));
    }
    let base = fit_fresh(cfg, data)?.predict_hard(u.view())?;
    let trials: Vec<(usize, usize)> = (0..k)
        .into_par_iter()
        .map(|t| {
            let neighbor = replace_one_neighbor(data, &mut derived_rng(seed, &[t as u64]));
            let pred = fit_fresh(cfg, &neighbor)?.predict_hard(u.view())?;
            compare_predictions(&base, &pred, data.num_classes())
        })
        .collect::<Result<_>>()?;
    Ok(SensitivityReport {
        row_hamming_max: trials.iter().map(|t| t.0).max().unwrap_or(0),
        entry_hamming_max: trials.iter().map(|t| t.1).max().unwrap_or(0),
        samples: k,
        trial_rows: trials.iter().map(|t| t.0).collect(),
    })
}
