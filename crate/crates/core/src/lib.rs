//! Mixed-frequency Bayesian VAR with steady-state priors and common
//! stochastic volatility.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod dgp;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod gibbs;
mod linalg;
pub mod priors;
pub mod ssm;
pub mod stats;
pub mod tsdata;

pub use error::{Error, Result};
pub use linalg::{companion, spectral_radius};
