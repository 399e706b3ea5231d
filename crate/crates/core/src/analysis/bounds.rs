//! Consensus-stability bounds for majority-vote co-training.

use serde::{Deserialize, Serialize};

use super::special::hurwitz_zeta;
use crate::{Error, Result};

/// Chernoff bound on the probability that the consensus changes in one
/// round: `|U| · 4^{m/2} · a^{m/2} · (1-a)^{m/2}`, for training accuracy
/// `a ∈ [1/2, 1]`. The value is not clamped.
pub fn per_round_change_bound(u_size: usize, m: usize, accuracy: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&accuracy) {
        return Err(Error::invalid(format!("training accuracy must lie in [0.5, 1], got {accuracy}")));
    }
    let half_m = m as f64 / 2.0;
    Ok(u_size as f64 * (4.0 * accuracy * (1.0 - accuracy)).powf(half_m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceQuery {
    pub u_size: usize,
    pub m: usize,
    /// Accuracy growth constant: `a_t ≥ 1 - c/t`.
    pub c: f64,
    pub t0: u64,
}

impl ConvergenceQuery {
    pub fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(Error::config("m", format!("convergence bound needs m >= 3, got {}", self.m)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::config("c", "must be positive"));
        }
        if self.t0 < 1 {
            return Err(Error::config("t0", "must be at least 1"));
        }
        if self.u_size < 1 {
            return Err(Error::config("u", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBound {
    /// `|U| (4c)^{m/2} ζ(m/2, t0+1)`; may exceed one.
    pub raw: f64,
    /// `min(1, raw)`, the usable failure probability.
    pub clamped: f64,
}

/// Failure probability bound for the consensus to stop changing after `t0`.
pub fn convergence_bound(q: &ConvergenceQuery) -> Result<ConvergenceBound> {
    q.validate()?;
    let half_m = q.m as f64 / 2.0;
    let zeta = hurwitz_zeta(half_m, q.t0 as f64 + 1.0)?;
    // Log space keeps (4c)^{m/2} from overflowing when ζ is tiny.
    let log_raw = (q.u_size as f64).ln() + half_m * (4.0 * q.c).ln() + zeta.ln();
    let raw = log_raw.exp();
    Ok(ConvergenceBound { raw, clamped: raw.min(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_accuracy_never_changes() {
        assert_eq!(per_round_change_bound(1000, 5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn coin_flip_accuracy_is_vacuous() {
        assert!((per_round_change_bound(100, 4, 0.5).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn decreasing_in_accuracy() {
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let a = 0.5 + i as f64 / 200.0;
            let v = per_round_change_bound(100, 6, a).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(per_round_change_bound(100, 6, 0.4).is_err());
        assert!(per_round_change_bound(100, 6, 1.01).is_err());
    }

    #[test]
    fn linear_in_pool_size() {
        let q = ConvergenceQuery { u_size: 1, m: 7, c: 2.0, t0: 50 };
        let base = convergence_bound(&q).unwrap().raw;
        for u in [10, 1000, 123_456] {
            let v = convergence_bound(&ConvergenceQuery { u_size: u, ..q }).unwrap().raw;
            assert!((v / u as f64 - base).abs() <= 1e-12 * base);
        }
    }

    #[test]
    fn rejects_two_clients() {
        let q = ConvergenceQuery { u_size: 10, m: 2, c: 1.0, t0: 10 };
        assert!(convergence_bound(&q).unwrap_err().to_string().contains("m >= 3"));
    }

    #[test]
    fn clamps_vacuous_values() {
        // Five clients: the closed form exceeds one at these parameters.
        let b = convergence_bound(&ConvergenceQuery { u_size: 10_000, m: 5, c: 1.0, t0: 1000 }).unwrap();
        assert!(b.raw > 1.0);
        assert_eq!(b.clamped, 1.0);
    }
}
