//! Calibration of lumped daily rainfall-runoff models against expectile and
//! quantile losses, with the estimators, diagnostics and split-sample
//! evaluation machinery around it.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod evaluation;
pub mod hydro;
pub mod io;
pub mod par;
pub mod risk;
pub mod tail;

pub use error::{Error, Result};
pub use par::Execution;
pub use risk::{Level, LossKind, Sample};
