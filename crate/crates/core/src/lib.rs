//! Numerical laboratory for holomorphic curves `ℂ → ℂP^N` with the
//! translation action: Fubini–Study geometry, spherical derivatives and
//! energy observables, invariant-measure sampling, covering numbers and
//! finite-alphabet rate-distortion machinery.
//!
//! The crate is organised bottom-up:
//!
//! * [`projective`]: points of `ℂP^N` and the Fubini–Study distance.
//! * [`curves`]: curve representations, `|df|`, energy integrals and
//!   certification of the Brody bound.
//! * [`curve_space`]: dynamical metrics, covering numbers, tame growth.
//! * [`measures`]: samplers for translation-invariant measures and Monte
//!   Carlo expectations.
//! * [`information`]: entropy, mutual information, Blahut–Arimoto and
//!   rate-distortion slope fitting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve_space;
pub mod curves;
mod error;
pub mod information;
pub mod measures;
pub mod numeric;
pub mod projective;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use projective::ProjectivePoint;
