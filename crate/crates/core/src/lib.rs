//! Convergence-rate checks for operator-splitting schemes.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod counterexamples;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod km;
pub mod linalg;
pub mod prox;
pub mod rates;
pub mod report;
pub mod splitting;

pub use error::{Error, Result};
pub use linalg::{ConvexSet, LinearMap, Subspace, Vector};
pub use prox::ProxFunction;
