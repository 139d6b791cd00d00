//! Evaluators for optimality conditions and closed-form bounds.

pub mod average;
pub mod bounds;
pub mod kkt;

pub use average::{avg_update, default_window, AverageUpdateEstimate};
pub use bounds::{
    amortized_bound_rhs, ball_envelope, ball_shrinkage_bound, fw_rate_bound, iterate_norm_bound,
    iterate_norm_excess_bound, lr_sequence_limit_check, AmortizedBound,
};
pub use kkt::{kkt_residual, KktReport};
