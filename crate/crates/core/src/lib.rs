//! Numerical laboratory for the polyharmonic Hardy-Henon equation
//! `(-Δ)^m u = |x|^σ u^p`.
//!
//! Radial profiles live on geometric grids with power-law extensions at both
//! ends. Entire solutions come from the Riesz integral equation, ball
//! solutions from Boggio's Green function.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod cli;
pub mod entire;
pub mod error;
pub mod exponents;
pub mod io;
pub mod quadrature;
pub mod radial;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use exponents::{Exponent, Exponents, ProblemParams, RegimeCertificate, Verdict};
pub use radial::{PowerLaw, RadialFunction, RadialGrid};
