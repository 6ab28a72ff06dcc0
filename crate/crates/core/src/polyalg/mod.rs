//! Exact multivariate polynomials and the action of Dunkl operators on them.

pub mod dunkl;
pub mod poly;
pub mod scalar;

pub use dunkl::DunklOperators;
pub use poly::{MultiIndex, Polynomial};
pub use scalar::{QuadSurd, Scalar};
