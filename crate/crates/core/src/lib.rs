// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod dpp;
pub mod error;
pub mod harmonics;
pub mod hilbert;
pub mod linalg;
pub mod quadrature;
pub mod stats;
pub mod surface;
pub mod table;
pub mod testfn;
pub mod toeplitz;

pub use error::{Error, Result};
