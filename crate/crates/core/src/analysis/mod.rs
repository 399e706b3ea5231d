//! Bound evaluators, special functions, communication accounting and run metrics.

mod bounds;
mod comm;
mod metrics;
mod special;

pub use bounds::{convergence_bound, per_round_change_bound, ConvergenceBound, ConvergenceQuery};
pub use comm::{communication_cost, CommCost, CommSpec};
pub use metrics::{run_metrics, RoundMetrics};
pub use special::{hurwitz_zeta, normal_cdf, probit};
