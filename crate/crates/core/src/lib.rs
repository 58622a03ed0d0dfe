//! Two-atom Rydberg controlled-phase gates.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod optimizer;
pub mod quadrature;
pub mod two_level;

pub use error::{Error, Result};
