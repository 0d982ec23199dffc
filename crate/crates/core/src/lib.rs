//! Pseudospectral solver for the semirelativistic Hartree equation
//! `i ∂_t φ = (1-Δ)^{1/2} φ - λ (K_α ∗ |φ|²) φ` on a periodic box, with
//! collapse diagnostics, a variational estimate of the critical coupling
//! and numerical checks of bosonic Fock-space identities.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod critical;
pub mod energy;
pub mod error;
pub mod evolution;
mod fft;
pub mod field;
pub mod fock;
pub mod grid;
pub mod interaction;
pub mod profiles;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{Field, Representation};
pub use grid::Grid;
pub use num_complex::Complex64;
