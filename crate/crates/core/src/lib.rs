//! Certified computations around Siegel linearization of germs
//! `z -> lambda z + f_2 z^2 + ...` with `lambda = exp(2 pi i omega)`.

pub mod arith;
pub mod error;

pub use error::{Error, Result};
pub mod contfrac;
pub mod report;
pub mod weights;
pub mod brjuno;
pub mod davie;
pub mod linearize;
pub mod dsl;
pub mod suite;
