//! Exact finite-fragment laboratory for Keisler measures.
//!
//! Formulas, fragments, measures and Morley products over the random ternary
//! relation, Henson graphs, the random graph and the half-measure theories,
//! together with quantifier elimination for the infinite half-measure theory.

pub mod approx;
pub mod cli;
pub mod error;
pub mod formula;
pub mod linear;
pub mod measures;
pub mod morley;
pub mod qe;
pub mod scalar;
pub mod scenarios;
pub mod theories;
pub mod types;

pub use error::{Error, Result};

/// Exact rationals used for all measure values.
pub type Rational = num::BigRational;
/// Machine-word rationals for the generic numeric kernels.
pub type SmallRational = num::rational::Ratio<i64>;
