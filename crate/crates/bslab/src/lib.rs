//! Numerical laboratory for modified Fredholm determinants of the
//! Birman-Schwinger operator of radial Schrodinger operators in three
//! dimensions with complex potentials.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bsop;
pub mod det;
pub mod error;
pub mod greenfn;
pub mod hardy;
pub mod jost;
pub mod oracle;
pub mod potential;
pub mod spectra;
pub mod traceform;
pub mod quad;

pub use error::{BsError, Result};
pub use num_complex::Complex64;
