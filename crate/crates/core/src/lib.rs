//! Radially-compressed Toeplitz matrices over reproducing-kernel spaces on
//! discs, their spectra, and finite-N studies of the trace and eigenvalue
//! density limits governed by the boundary values of the symbol.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod moments;
pub mod quad;
pub mod special;
pub mod spectra;
pub mod symbol;
pub mod szego;
pub mod toeplitz;

pub use error::{Error, Result};
