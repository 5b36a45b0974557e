//! Channel impairments: additive white Gaussian noise and tapped-delay-line
//! multipath fading.
//!
//! The SNR convention is fixed by template normalization: every template has
//! unit average power, so `snr_db` alone determines the noise variance
//! `10^(-snr_db/10)`. Multipath tap powers are normalized to sum to one, so
//! fading preserves average received power and the SNR axis means the same
//! thing for faded and unfaded runs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SampleBuffer;
use crate::synthesis::RngSeed;

/// AWGN level, stated as signal-to-noise ratio against a unit-power signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwgnSpec {
    pub snr_db: f64,
}

impl AwgnSpec {
    pub fn new(snr_db: f64) -> Self {
        Self { snr_db }
    }

    /// Spec for a given noise variance: `snr_db = -10 log10(var)` relative
    /// to a unit-power signal.
    pub fn from_noise_var(noise_var: f64) -> Self {
        Self {
            snr_db: -10.0 * noise_var.log10(),
        }
    }

    /// Noise variance implied against the unit-power signal convention.
    pub fn noise_var(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

/// A multipath power-delay profile: tap delays in nanoseconds with tap
/// gains in dB. Linear tap powers are normalized to sum to one before any
/// use, so the profile only shapes the channel, never its average gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedBProfile {
    tap_delays_ns: Vec<f64>,
    tap_gains_db: Vec<f64>,
}

impl PedBProfile {
    pub fn new(tap_delays_ns: Vec<f64>, tap_gains_db: Vec<f64>) -> Result<Self> {
        if tap_delays_ns.is_empty() {
            return Err(Error::InvalidInput("profile needs at least one tap".into()));
        }
        if tap_delays_ns.len() != tap_gains_db.len() {
            return Err(Error::DimensionMismatch {
                left: tap_delays_ns.len(),
                right: tap_gains_db.len(),
            });
        }
        if let Some(i) = tap_delays_ns
            .iter()
            .position(|d| !(d.is_finite() && *d >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "tap {i} delay must be finite and nonnegative"
            )));
        }
        if let Some(i) = tap_gains_db.iter().position(|g| !g.is_finite()) {
            return Err(Error::InvalidInput(format!("tap {i} gain must be finite")));
        }
        Ok(Self {
            tap_delays_ns,
            tap_gains_db,
        })
    }

    /// The ITU Pedestrian-B profile: six taps spread over 3.7 us with
    /// 633 ns RMS delay spread.
    pub fn itu_pedestrian_b() -> Self {
        Self {
            tap_delays_ns: vec![0.0, 200.0, 800.0, 1200.0, 2300.0, 3700.0],
            tap_gains_db: vec![0.0, -0.9, -4.9, -8.0, -7.8, -23.9],
        }
    }

    pub fn tap_delays_ns(&self) -> &[f64] {
        &self.tap_delays_ns
    }

    pub fn tap_gains_db(&self) -> &[f64] {
        &self.tap_gains_db
    }

    /// Linear tap powers normalized to sum to exactly one.
    pub fn normalized_linear_powers(&self) -> Vec<f64> {
        let linear: Vec<f64> = self
            .tap_gains_db
            .iter()
            .map(|g| 10f64.powf(g / 10.0))
            .collect();
        let total: f64 = linear.iter().sum();
        linear.iter().map(|p| p / total).collect()
    }

    /// Power-weighted RMS delay spread of the normalized profile.
    pub fn rms_delay_spread_ns(&self) -> f64 {
        let powers = self.normalized_linear_powers();
        let mean: f64 = powers
            .iter()
            .zip(&self.tap_delays_ns)
            .map(|(p, d)| p * d)
            .sum();
        let second: f64 = powers
            .iter()
            .zip(&self.tap_delays_ns)
            .map(|(p, d)| p * d * d)
            .sum();
        (second - mean * mean).sqrt()
    }

    /// Integer sample index of each tap at the given sample rate
    /// (nearest-sample placement).
    pub fn tap_sample_indices(&self, sample_rate_hz: f64) -> Vec<usize> {
        self.tap_delays_ns
            .iter()
            .map(|d| (d * sample_rate_hz / 1e9).round() as usize)
            .collect()
    }
}

/// Add i.i.d. complex Gaussian noise at the variance implied by `spec`.
pub fn add_awgn(x: &SampleBuffer, spec: &AwgnSpec, seed: RngSeed) -> SampleBuffer {
    let var = spec.noise_var();
    let sigma = (var / 2.0).sqrt();
    let mut rng = seed.rng();
    let samples: Vec<Complex64> = x
        .samples()
        .iter()
        .map(|s| {
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            s + Complex64::new(g1 * sigma, g2 * sigma)
        })
        .collect();
    SampleBuffer::new(samples, x.sample_rate_hz()).expect("noise addition preserves validity")
}

/// Pass `x` through one block-fading realization of the profile: each tap
/// gets a complex Gaussian coefficient with variance equal to its
/// normalized power, drawn once for the whole buffer, and the tapped
/// delay line output is truncated to the input length.
///
/// Expected output power equals input power; single realizations fluctuate
/// with the fading.
pub fn apply_pedb(x: &SampleBuffer, profile: &PedBProfile, seed: RngSeed) -> SampleBuffer {
    let indices = profile.tap_sample_indices(x.sample_rate_hz());
    if indices.len() > 1 && indices.iter().all(|&i| i == 0) {
        log::warn!(
            "sample rate {} Hz collapses all {} taps to delay 0; channel degenerates to a scalar gain",
            x.sample_rate_hz(),
            indices.len()
        );
    }
    let powers = profile.normalized_linear_powers();
    let mut rng = seed.rng();
    let coeffs: Vec<Complex64> = powers
        .iter()
        .map(|p| {
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            Complex64::new(g1, g2) * (p / 2.0).sqrt()
        })
        .collect();

    let n = x.len();
    let input = x.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (h, &delay) in coeffs.iter().zip(indices.iter()) {
        if delay >= n {
            continue;
        }
        for l in delay..n {
            out[l] += h * input[l - delay];
        }
    }
    SampleBuffer::new(out, x.sample_rate_hz()).expect("fading preserves validity")
}
