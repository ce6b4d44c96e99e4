//! Deterministic quadrature and Fourier machinery.
//!
//! Everything here is built around two conventions that the rest of the crate
//! relies on:
//!
//! * Fourier transform: `ghat(u) = integral dt e^{iut} g(t)`, with the inverse
//!   carrying the factor 1/(2 pi).
//! * Determinism: panel subdivision and summation order are fixed functions of
//!   the input, so identical calls produce bit-identical results.

pub mod envelope;
pub mod fourier;
pub mod interp;
pub mod quadrature;

pub use envelope::DecayEnvelope;
pub use fourier::{fourier_transform_weight, power_spectrum_of_square, GridSpec, SpectralSamples};
pub use quadrature::{integrate_finite, integrate_semi_infinite, QuadratureResult, TailSpec};
