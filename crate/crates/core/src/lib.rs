//! Exact p-adic machinery for differential modules on polyannuli.
//!
//! The crate is organised bottom-up: [`scalar`] provides truncated p-adic and
//! cyclotomic arithmetic, [`laurent`] adds multivariate Laurent polynomials with
//! Gauss norms, [`expcalc`] implements the exponent calculus on multisets of
//! p-adic integers, [`weier`] the Weierstrass kernel, [`diffmod`] differential
//! modules with their root-of-unity actions, and [`fuchs`] the exponent and
//! decomposition engine built on top of them.

pub mod diffmod;
pub mod error;
pub mod expcalc;
pub mod fixtures;
pub mod fuchs;
pub mod json;
pub mod laurent;
pub mod linalg;
pub mod matrix;
pub mod rat;
pub mod scalar;
pub mod selftest;
pub mod weier;

pub use error::{Error, Result};
pub use diffmod::{DiffModule, GammaMatrix, Provenance, StandardForm};
pub use expcalc::{Coord, ExponentEntry, ExponentMultiset};

pub use laurent::{LaurentSeries, LogRadiusBox, Series};
pub use matrix::Matrix;
pub use rat::{LogNorm, Q};
pub use scalar::{CycScalar, PadicScalar};

/// Relative precision used when a caller does not ask for one.
pub const DEFAULT_PREC: u32 = 32;
