//! Two-sample inference for compositional data under Dirichlet and nested
//! Dirichlet models.

// NaN must fail positivity checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Series and Lanczos coefficients are written out to full precision.
#![allow(clippy::excessive_precision)]

pub mod composition;
pub mod dirichlet;
pub mod error;
pub mod hypothesis;
pub mod io;
pub mod nested;
pub mod numerics;
pub mod sim;
pub mod tree_search;

pub use error::{Error, Result};
