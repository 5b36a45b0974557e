//! Spectrum sensing by spectra correlation.
//!
//! Detects a weak stationary signal in Gaussian noise by correlating the
//! received block's periodogram with an a-priori PSD template, and provides
//! the supporting machinery: covariance models (Toeplitz and circulant
//! surrogate), detector statistics, template synthesis, channel simulation,
//! template-quality metrics, and a Monte Carlo experiment harness.

pub mod channel;
pub mod detectors;
pub mod error;
pub mod features;
pub(crate) mod fft;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
