//! Occupation-time functionals of one-dimensional symmetric Lévy processes.
//!
//! The crate covers characteristic exponents and the conditions that make a
//! process eligible for the scaling limit, transition densities by Fourier
//! inversion, exact-in-law path simulation, the Fourier split of the scaled
//! functional `I_n(t)` with Monte-Carlo moment estimation, and the geometric
//! identities behind the moment computation.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod densities;
pub mod error;
pub mod exponents;
pub mod functionals;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod verification;

pub use error::{Error, Result};
pub use exponents::{CharacteristicExponent, ExponentKind};
