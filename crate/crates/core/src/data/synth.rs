use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::LabeledDataset;
use crate::rng::rng_from;
use crate::{Error, Result};

/// `C` unit-variance Gaussian clusters in `d` dimensions.
///
/// Class `k` is centred on coordinate axis `k mod d` at distance
/// `separation * (k / d + 1)` from the origin, so any two means are at least
/// `separation` apart. Class of row `i` is `i mod C`, which balances the
/// counts to within one.
pub fn make_blobs(n: usize, d: usize, classes: usize, separation: f64, seed: u64) -> Result<LabeledDataset> {
    if n < classes {
        return Err(Error::invalid(format!("make_blobs needs n >= C ({n} < {classes})")));
    }
    if d == 0 || !(separation > 0.0) {
        return Err(Error::invalid("make_blobs needs d >= 1 and separation > 0"));
    }
    let mut rng = rng_from(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut features = Array2::<f64>::zeros((n, d));
    for (i, &y) in labels.iter().enumerate() {
        for j in 0..d {
            features[[i, j]] = StandardNormal.sample(&mut rng);
        }
        features[[i, y % d]] += separation * (y / d + 1) as f64;
    }
    LabeledDataset::new(features, labels, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_per_class() {
        let ds = make_blobs(4, 3, 4, 5.0, 0).unwrap();
        assert_eq!(ds.class_histogram(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let a = make_blobs(50, 3, 3, 2.0, 11).unwrap();
        let b = make_blobs(50, 3, 3, 2.0, 11).unwrap();
        let c = make_blobs(50, 3, 3, 2.0, 12).unwrap();
        assert!(a.features().iter().zip(b.features()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn balanced_counts() {
        let ds = make_blobs(101, 2, 3, 1.0, 3).unwrap();
        let h = ds.class_histogram();
        assert!(h.iter().max().unwrap() - h.iter().min().unwrap() <= 1);
        assert!(make_blobs(2, 2, 3, 1.0, 0).is_err());
        assert!(make_blobs(10, 2, 3, 0.0, 0).is_err());
    }
}
