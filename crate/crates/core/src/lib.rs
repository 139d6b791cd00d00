//! Decoupled weight decay through the lens of norm-constrained optimization.
//!
//! The crate implements AdamW and Adam with ℓ2 regularization, normalized and
//! unnormalized steepest descent with decoupled weight decay for the ℓ1, ℓ2
//! and ℓ∞ geometries, and Frank–Wolfe over norm balls. Next to the step rules
//! it carries evaluators for the closed-form quantities that describe these
//! methods (KKT residuals of the norm-ball problem, the norm-ball shrinkage
//! envelope, the O(1/t) suboptimality bound, the average-update-size bound for
//! Adam and the AdamW iterate-norm bound), plus a deterministic experiment
//! harness that writes CSV traces.
//!
//! Randomized trial suites in [`trials`] are data-parallel through rayon when
//! the `parallel` feature is enabled (the default) and fall back to plain
//! iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
mod error;
pub mod harness;
pub mod objectives;
pub mod optimizers;
pub mod par;
pub mod trials;
pub mod vecmath;

pub use error::{Error, Result};
pub use objectives::Objective;
pub use vecmath::{NormKind, ParamVector};

/// Library version recorded in every trace header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
