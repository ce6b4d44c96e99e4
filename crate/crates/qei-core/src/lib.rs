//! Lower bounds on weighted averages of the energy density of a free scalar
//! field along an inertial worldline, together with the machinery needed to
//! check them: deterministic quadrature, Fourier transforms of sampling
//! weights, mass-spectrum diagnostics, and truncated Fock-space eigenvalue
//! problems.
//!
//! The crate is organized as a pipeline. [`weights`] defines the sampling
//! functions g and their scale family g_tau. [`numerics`] supplies the
//! quadrature and Fourier engines. [`spectral`] turns a weight into fast
//! evaluators for |ghat|^2 and for the transform of |g|^2. [`qei`] computes
//! the bounds themselves and their scaling exponents, [`spectrum`] handles
//! mass spectra and nuclearity diagnostics, and [`fock`] builds explicit
//! states in a box-quantized Fock space whose energy expectation values probe
//! the bounds from above.
//!
//! Everything is deterministic: identical inputs produce bit-identical
//! outputs, including under the optional data-parallel execution mode (see
//! [`exec`]).

pub mod error;
pub mod exec;
pub mod fock;
pub mod numerics;
pub mod qei;
pub mod spectral;
pub mod spectrum;
pub mod weights;

pub use error::{Error, Result};
