// `!(x > 0.0)` guards are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asymptotics;
pub mod bs;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod levy;
pub mod mc;
pub mod par;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
