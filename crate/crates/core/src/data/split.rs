use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, UnlabeledDataset};
use crate::rng::{derived_rng, Rng};
use crate::{Error, Result};

const SPLIT_STREAM: u64 = 0x5f11;
const IID_STREAM: u64 = 0x11d;
const DIRICHLET_STREAM: u64 = 0xd1c;

/// Apportions `total` units to `weights` by the largest-remainder rule.
/// Ties in the fractional part go to the lower index. The result sums to
/// `total` exactly.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    assert!(sum > 0.0 && weights.iter().all(|w| *w >= 0.0), "weights must be nonnegative with positive sum");
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    if assigned > total {
        // Only reachable through floating-point overshoot; trim from the largest.
        let mut excess = assigned - total;
        while excess > 0 {
            let i = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
            counts[i] -= 1;
            excess -= 1;
        }
        return counts;
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Shuffled index sets `(train, test, unlabeled)` covering `0..n`.
pub fn split_indices(
    n: usize,
    train_frac: f64,
    test_frac: f64,
    unlabeled_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let fracs = [train_frac, test_frac, unlabeled_frac];
    if fracs.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::invalid("split fractions must be positive"));
    }
    if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("split fractions must sum to 1"));
    }
    let sizes = largest_remainder(n, &fracs);
    if sizes.contains(&0) {
        return Err(Error::invalid(format!("split of {n} rows leaves an empty part: {sizes:?}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derived_rng(seed, &[SPLIT_STREAM]));
    let unlabeled = idx.split_off(sizes[0] + sizes[1]);
    let test = idx.split_off(sizes[0]);
    Ok((idx, test, unlabeled))
}

/// Splits a dataset into train, test and an unlabeled pool whose labels
/// survive only as hidden ground truth.
pub fn split_train_test_unlabeled(
    ds: &LabeledDataset,
    train_frac: f64,
    test_frac: f64,
    unlabeled_frac: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, UnlabeledDataset)> {
    let (train, test, unlabeled) = split_indices(ds.len(), train_frac, test_frac, unlabeled_frac, seed)?;
    let u = ds.select(&unlabeled);
    let pool = UnlabeledDataset::with_truth(u.features().clone(), u.labels().to_vec(), ds.num_classes())?;
    Ok((ds.select(&train), ds.select(&test), pool))
}

/// Balanced random assignment of `0..n` to `m` shards (sizes differ by at most one).
pub fn iid_assignment(n: usize, m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if m == 0 || n < m {
        return Err(Error::Partition(format!("cannot split {n} examples across {m} clients")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derived_rng(seed, &[IID_STREAM]));
    let (base, extra) = (n / m, n % m);
    let mut shards = Vec::with_capacity(m);
    let mut start = 0;
    for i in 0..m {
        let len = base + usize::from(i < extra);
        shards.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(shards)
}

pub fn partition_iid(train: &LabeledDataset, m: usize, seed: u64) -> Result<Vec<LabeledDataset>> {
    Ok(iid_assignment(train.len(), m, seed)?.iter().map(|s| train.select(s)).collect())
}

/// Log of a Gamma(shape, 1) draw, stable for tiny shapes where the draw
/// itself underflows to zero.
fn log_gamma_draw(shape: f64, rng: &mut Rng) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("valid shape").sample(rng).ln()
    } else {
        let boosted = Gamma::new(shape + 1.0, 1.0).expect("valid shape").sample(rng);
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        boosted.ln() + u.ln() / shape
    }
}

/// Log class proportions drawn from a symmetric Dirichlet(alpha).
fn log_dirichlet(alpha: f64, classes: usize, rng: &mut Rng) -> Vec<f64> {
    let logs: Vec<f64> = (0..classes).map(|_| log_gamma_draw(alpha, rng)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let norm = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logs.iter().map(|l| l - norm).collect()
}

/// Label-skewed assignment. Clients `0..m/2` draw class proportions from
/// Dirichlet(alpha1), the rest from Dirichlet(alpha2). Each class's examples
/// are shuffled and dealt to clients in proportion to their weight for that
/// class.
pub fn dirichlet_assignment(
    labels: &[usize],
    classes: usize,
    m: usize,
    alpha1: f64,
    alpha2: f64,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::Partition("need at least one client".into()));
    }
    if !(alpha1 > 0.0 && alpha2 > 0.0) {
        return Err(Error::Partition("dirichlet concentrations must be positive".into()));
    }
    let mut rng = derived_rng(seed, &[DIRICHLET_STREAM]);
    let log_props: Vec<Vec<f64>> = (0..m)
        .map(|i| log_dirichlet(if i < m / 2 { alpha1 } else { alpha2 }, classes, &mut rng))
        .collect();

    let mut shards = vec![Vec::new(); m];
    for k in 0..classes {
        let mut pool: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
        if pool.is_empty() {
            continue;
        }
        pool.shuffle(&mut rng);
        let max = log_props.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_props.iter().map(|p| (p[k] - max).exp()).collect();
        let counts = largest_remainder(pool.len(), &weights);
        let mut rest = pool.as_slice();
        for (shard, &c) in shards.iter_mut().zip(&counts) {
            if c > rest.len() {
                return Err(Error::Partition(format!("class {k} pool exhausted during assignment")));
            }
            let (take, tail) = rest.split_at(c);
            shard.extend_from_slice(take);
            rest = tail;
        }
    }
    if let Some(empty) = shards.iter().position(Vec::is_empty) {
        return Err(Error::Partition(format!("client {empty} received no examples")));
    }
    Ok(shards)
}

pub fn partition_dirichlet(
    train: &LabeledDataset,
    m: usize,
    alpha1: f64,
    alpha2: f64,
    seed: u64,
) -> Result<Vec<LabeledDataset>> {
    let shards = dirichlet_assignment(train.labels(), train.num_classes(), m, alpha1, alpha2, seed)?;
    Ok(shards.iter().map(|s| train.select(s)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum PartitionScheme {
    Iid,
    Dirichlet { alpha1: f64, alpha2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub clients: usize,
    #[serde(flatten)]
    pub scheme: PartitionScheme,
    pub seed: u64,
}

impl PartitionSpec {
    pub fn apply(&self, train: &LabeledDataset) -> Result<Vec<LabeledDataset>> {
        match self.scheme {
            PartitionScheme::Iid => partition_iid(train, self.clients, self.seed),
            PartitionScheme::Dirichlet { alpha1, alpha2 } => {
                partition_dirichlet(train, self.clients, alpha1, alpha2, self.seed)
            }
        }
    }
}
