//! Numerics for the hard-edge tacnode of non-intersecting squared Bessel
//! paths: the Hastings-McLeod solution of inhomogeneous Painlevé II, the
//! associated 4×4 Lax pair, the tacnode kernel built from it, finite-n
//! kernels of the underlying biorthogonal ensemble, phase geometry, and a
//! path sampler.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod finiten;
pub mod laxpair;
pub mod painleve;
pub mod phase;
pub mod quadrature;
pub mod rhkernel;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
