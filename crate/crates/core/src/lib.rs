// Validation deliberately uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod pathint;
pub mod phonon;
pub mod photonstats;
pub mod pulse;
pub mod quad;
pub mod scan;
pub mod units;

pub use error::{Error, ErrorClass, Result};
