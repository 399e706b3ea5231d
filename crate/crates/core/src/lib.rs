//! Federated co-training laboratory.
//!
//! Clients train local models on private data, share only hard labels on a
//! public unlabeled pool, and retrain on the server's consensus labels. The
//! crate also carries a bit-flip differential-privacy layer for the shared
//! labels, numeric evaluators for the convergence and sensitivity bounds,
//! baseline protocols (local-only, centralized, FedAvg, one-shot teacher
//! distillation), and membership-inference scoring.
//!
//! Module map:
//!
//! - [`data`]: datasets, splits, client partitioning, label encodings.
//! - [`learners`]: from-scratch supervised learners behind one contract.
//! - [`consensus`]: majority and qualified-majority voting.
//! - [`privacy`]: flip probabilities, the XOR mechanism, sensitivity.
//! - [`analysis`]: special functions, bounds, communication cost, metrics.
//! - [`protocol`]: FedCT, DP-FedCT and the baselines.
//! - [`attacks`]: membership-inference AUC.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod attacks;
pub mod consensus;
pub mod data;
mod error;
pub mod learners;
pub mod privacy;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
