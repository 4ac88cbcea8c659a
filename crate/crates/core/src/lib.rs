//! Exact engine for Fock-space delocalization in the self-dual kicked Ising chain.
//!
//! The crate is `no_std` (with `alloc`) and carries no IO. It contains:
//!
//! * [`model`]: the circuit family, its gates and parameter validation,
//! * [`statevector`]: dense Floquet evolution of the `2^L` amplitudes,
//! * [`fockspace`]: inverse participation ratios, overlap statistics and
//!   every closed-form reference (IPR dynamics, finite-time overlap density,
//!   Porter-Thomas, boundary-perturbed forms),
//! * [`dual`]: the space-time dual transfer matrices `U(0)`, `U(1)` and
//!   boundary vectors that reproduce every amplitude as a matrix product,
//! * [`rmt`]: Haar sampling and Monte-Carlo checks of Haar moments.
//!
//! Bit-string convention shared by every module: site `0` (the first site of
//! the chain) is the most significant bit of the amplitude index.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dual;
pub mod error;
pub mod fockspace;
pub mod model;
pub mod numeric;
pub mod rmt;
pub mod rng;
pub mod statevector;

pub use error::{Error, Result};
pub use num_complex::Complex64;
