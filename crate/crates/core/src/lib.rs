//! Flag geometry, multicones and numerical certificates for Anosov representations of
//! surface groups into `SL(3, R)` near the reducible Fuchsian locus.
//!
//! The `examples/` directory walks through each module; the `barbot` binary wraps the
//! long-running computations and writes JSON and CSV reports.

// `!(x > 0.0)` is used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anosov;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod flag;
pub mod hitchin;
pub mod linalg;
pub mod multicone;
pub mod plane;
pub mod spectral;
pub mod symspace;

pub use error::{Error, Result};
