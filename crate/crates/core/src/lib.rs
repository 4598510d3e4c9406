//! Monotone transport maps between probability measures on truncated
//! separable Hilbert spaces.
//!
//! Points are coefficient vectors in a fixed orthonormal basis (`HVec`).
//! The crate provides exact discrete optimal transport for the quadratic cost
//! with cyclic-monotonicity certificates, max-affine convex potentials,
//! semi-discrete dual ascent, closed-form Gaussian maps, empirical
//! center-outward ranks and seeded Monte-Carlo experiment harnesses.

pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod maps;
pub mod measures;
pub mod ot;
pub mod ranks;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use hilbert::HVec;
