//! Nahm data for Dirac multimonopole boundary conditions.
//!
//! The pipeline builds an orthonormal polynomial frame of the eigenline
//! bundle over the reducible spectral curve of `n` points, assembles the
//! Lax pair from it and reads off `(T0, T1, T2, T3)`.
//!
//! Conventions: operations that take a [`spectral::MonopoleConfig`] and a
//! point label (`sheet_polynomial`, `h_split`, `pair_data`) use 1-based
//! labels; everything indexed through [`spectral::Spectral`] is 0-based.
//!
//! Most numerics are generic over [`scalar::Real`], implemented for `f64`
//! and double-double `qd::Quad`.

pub mod basis;
pub mod basis_direct;
pub mod basis_lagrange;
pub mod dirac;
pub mod error;
pub mod inner_product;
pub mod linalg;
pub mod nahm;
pub mod oracles;
pub mod perturbation;
pub mod poly;
pub mod scalar;
pub mod spectral;

pub use error::{ErrorClass, NahmError, Result};
pub use qd::Quad;
