//! Matched-filter retrieval of trace-gas enhancements from imaging
//! spectrometer radiance cubes.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix the common choices.

// NaN-rejecting comparisons like `!(x > 0.0)` and indexed loops over
// several parallel slices are intentional throughout the numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod background;
pub mod error;
pub mod eval;
pub mod filter;
pub mod io;
pub mod linalg;
pub mod parallel;
pub mod pixels;
pub mod scalar;
pub mod simulate;
pub mod target;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub type Cube = io::RadianceCube<f64>;
pub type Cube32 = io::RadianceCube<f32>;
pub type BackgroundModel64 = background::BackgroundModel<f64>;
pub type UnitAbsorption = target::UnitAbsorptionSpectrum<f64>;
pub type RetrievalResult64 = filter::RetrievalResult<f64>;
pub type RetrievalResult32 = filter::RetrievalResult<f32>;
