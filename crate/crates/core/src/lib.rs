//! Generalized Hermite expansions for Dunkl operators.
pub mod error;
pub mod hermite;
pub mod kernels;
mod par;
pub mod polyalg;
pub mod quad;
pub mod reflection;
pub mod spectral;
pub mod verify;
