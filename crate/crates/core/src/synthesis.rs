//! Parametric PSD templates and stationary Gaussian signal generation.
//!
//! Templates model the spectral footprint of analog and digital TV carriers
//! in a 6 MHz channel: narrow Gaussian-shaped peaks (the carriers) riding on
//! a flat pedestal. Peak positions are absolute carrier offsets from the
//! lower band edge; peak widths are fractions of the channel bandwidth so
//! the underlying spectral shape does not depend on the bin count chosen to
//! sample it. Every realized template is normalized to unit average power;
//! experiments set signal strength through the SNR, never by rescaling the
//! template.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::spectral::{PsdTemplate, SampleBuffer};

/// Default channel bandwidth: one analog TV channel.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 6e6;

/// NTSC visual carrier offset from the lower channel edge.
const NTSC_VIDEO_OFFSET_HZ: f64 = 1.25e6;
/// Color subcarrier: 3.579545 MHz above the visual carrier.
const NTSC_COLOR_OFFSET_HZ: f64 = NTSC_VIDEO_OFFSET_HZ + 3.579545e6;
/// Aural carrier: 4.5 MHz above the visual carrier.
const NTSC_AUDIO_OFFSET_HZ: f64 = NTSC_VIDEO_OFFSET_HZ + 4.5e6;
/// Relative carrier powers video : color : audio.
const NTSC_CARRIER_POWERS: [f64; 3] = [20.0, 2.0, 1.0];

/// Reproducible RNG handle: a base seed plus a stream id, so independent
/// random streams (signal, noise, fading) can be split off one
/// user-supplied seed without correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child seed for trial `index` within block `block`: offsets the
    /// stream id, keeping the base seed intact so a whole experiment is
    /// replayed from one number.
    pub fn derive(&self, block: u32, index: u32) -> RngSeed {
        let offset = ((block as u64) << 32) | index as u64;
        RngSeed {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Which spectral footprint to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    /// Three carrier peaks (video, color, audio) on a low pedestal.
    NtscLike,
    /// Flat pedestal plus one narrow pilot just above the lower band edge.
    AtscLike,
    /// Equal power in every bin.
    Flat,
    /// All power concentrated in bin 0.
    SingleBin,
    /// Caller-specified peaks on a pedestal.
    Custom,
}

impl TemplateKind {
    pub fn label(&self) -> &'static str {
        match self {
            TemplateKind::NtscLike => "ntsc_like",
            TemplateKind::AtscLike => "atsc_like",
            TemplateKind::Flat => "flat",
            TemplateKind::SingleBin => "single_bin",
            TemplateKind::Custom => "custom",
        }
    }
}

/// One Gaussian-shaped peak for custom templates: center as a fraction of
/// the bandwidth, width (standard deviation) as a fraction of the
/// bandwidth, and a relative power weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub center_fraction: f64,
    pub width_fraction: f64,
    pub relative_power: f64,
}

/// Kind-specific shape knobs. Defaults reproduce the built-in footprints;
/// fields irrelevant to a kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateParams {
    /// Fraction of total power spread flat across the band (carrier kinds).
    pub pedestal_fraction: f64,
    /// Carrier peak standard deviation as a fraction of the bandwidth.
    /// The default makes a peak about three bins wide at n = 256.
    pub peak_width_fraction: f64,
    /// Pilot offset above the lower band edge (ATSC-like).
    pub pilot_offset_hz: f64,
    /// Fraction of total power in the pilot (ATSC-like).
    pub pilot_power_fraction: f64,
    /// Pilot standard deviation as a fraction of the bandwidth.
    pub pilot_width_fraction: f64,
    /// Peaks for the custom kind; must be nonempty when kind = custom.
    pub custom_peaks: Vec<SpectralPeak>,
}

impl Default for TemplateParams {
    fn default() -> Self {
        Self {
            pedestal_fraction: 0.3,
            peak_width_fraction: 3.0 / 256.0,
            pilot_offset_hz: 310e3,
            pilot_power_fraction: 0.15,
            pilot_width_fraction: 0.006,
            custom_peaks: Vec::new(),
        }
    }
}

/// Full recipe for a sampled PSD template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub kind: TemplateKind,
    pub n: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub params: TemplateParams,
}

fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH_HZ
}

impl TemplateSpec {
    pub fn new(kind: TemplateKind, n: usize) -> Self {
        Self {
            kind,
            n,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            params: TemplateParams::default(),
        }
    }

    /// Same recipe sampled at a different bin count.
    pub fn with_n(&self, n: usize) -> TemplateSpec {
        TemplateSpec {
            n,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::InvalidConfig(format!(
                "template needs at least 16 bins to place spectral features, got n = {}",
                self.n
            )));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive and finite, got {}",
                self.bandwidth_hz
            )));
        }
        let p = &self.params;
        let frac_ok = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        match self.kind {
            TemplateKind::NtscLike => {
                if !frac_ok(p.pedestal_fraction) || p.pedestal_fraction >= 1.0 {
                    return Err(Error::InvalidConfig(
                        "pedestal fraction must lie in [0, 1)".into(),
                    ));
                }
                if !(p.peak_width_fraction > 0.0 && p.peak_width_fraction < 0.5) {
                    return Err(Error::InvalidConfig(
                        "peak width fraction must lie in (0, 0.5)".into(),
                    ));
                }
                if NTSC_AUDIO_OFFSET_HZ >= self.bandwidth_hz {
                    return Err(Error::InvalidConfig(format!(
                        "bandwidth {} Hz too narrow for the carrier at {} Hz",
                        self.bandwidth_hz, NTSC_AUDIO_OFFSET_HZ
                    )));
                }
            }
            TemplateKind::AtscLike => {
                if !frac_ok(p.pilot_power_fraction) {
                    return Err(Error::InvalidConfig(
                        "pilot power fraction must lie in [0, 1]".into(),
                    ));
                }
                if !(p.pilot_width_fraction > 0.0 && p.pilot_width_fraction < 0.5) {
                    return Err(Error::InvalidConfig(
                        "pilot width fraction must lie in (0, 0.5)".into(),
                    ));
                }
                if !(p.pilot_offset_hz > 0.0 && p.pilot_offset_hz < self.bandwidth_hz) {
                    return Err(Error::InvalidConfig(format!(
                        "pilot offset {} Hz outside the band (0, {})",
                        p.pilot_offset_hz, self.bandwidth_hz
                    )));
                }
            }
            TemplateKind::Custom => {
                if p.custom_peaks.is_empty() {
                    return Err(Error::InvalidConfig(
                        "custom template needs at least one peak".into(),
                    ));
                }
                if !frac_ok(p.pedestal_fraction) || p.pedestal_fraction >= 1.0 {
                    return Err(Error::InvalidConfig(
                        "pedestal fraction must lie in [0, 1)".into(),
                    ));
                }
                for (i, pk) in p.custom_peaks.iter().enumerate() {
                    if !(pk.center_fraction.is_finite() && (0.0..1.0).contains(&pk.center_fraction))
                    {
                        return Err(Error::InvalidConfig(format!(
                            "peak {i}: center fraction must lie in [0, 1)"
                        )));
                    }
                    if !(pk.width_fraction > 0.0 && pk.width_fraction < 0.5) {
                        return Err(Error::InvalidConfig(format!(
                            "peak {i}: width fraction must lie in (0, 0.5)"
                        )));
                    }
                    if !(pk.relative_power > 0.0 && pk.relative_power.is_finite()) {
                        return Err(Error::InvalidConfig(format!(
                            "peak {i}: relative power must be positive"
                        )));
                    }
                }
            }
            TemplateKind::Flat | TemplateKind::SingleBin => {}
        }
        Ok(())
    }

    fn peaks(&self) -> Vec<SpectralPeak> {
        let p = &self.params;
        match self.kind {
            TemplateKind::NtscLike => {
                let offsets = [NTSC_VIDEO_OFFSET_HZ, NTSC_COLOR_OFFSET_HZ, NTSC_AUDIO_OFFSET_HZ];
                offsets
                    .iter()
                    .zip(NTSC_CARRIER_POWERS.iter())
                    .map(|(&f, &w)| SpectralPeak {
                        center_fraction: f / self.bandwidth_hz,
                        width_fraction: p.peak_width_fraction,
                        relative_power: w,
                    })
                    .collect()
            }
            TemplateKind::AtscLike => vec![SpectralPeak {
                center_fraction: p.pilot_offset_hz / self.bandwidth_hz,
                width_fraction: p.pilot_width_fraction,
                relative_power: 1.0,
            }],
            TemplateKind::Custom => p.custom_peaks.clone(),
            TemplateKind::Flat | TemplateKind::SingleBin => Vec::new(),
        }
    }

    fn pedestal_fraction(&self) -> f64 {
        match self.kind {
            TemplateKind::NtscLike | TemplateKind::Custom => self.params.pedestal_fraction,
            TemplateKind::AtscLike => 1.0 - self.params.pilot_power_fraction,
            TemplateKind::Flat => 1.0,
            TemplateKind::SingleBin => 0.0,
        }
    }
}

/// Build the sampled PSD described by `spec`, normalized to unit average
/// power.
pub fn make_template(spec: &TemplateSpec) -> Result<PsdTemplate> {
    spec.validate()?;
    let n = spec.n;

    if spec.kind == TemplateKind::SingleBin {
        let mut values = vec![0.0; n];
        values[0] = n as f64;
        return PsdTemplate::new(values, spec.kind.label());
    }

    let pedestal = spec.pedestal_fraction();
    let mut values = vec![pedestal; n];

    let peaks = spec.peaks();
    if !peaks.is_empty() {
        // Distinct peaks must resolve to distinct bins, otherwise the
        // requested shape cannot be represented at this n.
        let mut centers: Vec<usize> = peaks
            .iter()
            .map(|pk| (pk.center_fraction * n as f64).round() as usize % n)
            .collect();
        centers.sort_unstable();
        if centers.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!(
                "n = {n} too coarse: two peaks fall on the same bin"
            )));
        }

        let total_weight: f64 = peaks.iter().map(|pk| pk.relative_power).sum();
        let peak_budget = 1.0 - pedestal;
        for pk in &peaks {
            // Sample the bump on the normalized frequency grid, then scale
            // it so its bin average contributes exactly its power share.
            let bump: Vec<f64> = (0..n)
                .map(|k| {
                    let theta = k as f64 / n as f64;
                    let mut d = (theta - pk.center_fraction).abs();
                    d = d.min(1.0 - d); // circular distance
                    (-0.5 * (d / pk.width_fraction).powi(2)).exp()
                })
                .collect();
            let mean: f64 = bump.iter().sum::<f64>() / n as f64;
            let share = peak_budget * pk.relative_power / total_weight;
            let scale = share / mean;
            for (v, b) in values.iter_mut().zip(bump.iter()) {
                *v += scale * b;
            }
        }
    }

    // Per-component normalization already makes the mean 1; divide out the
    // residual rounding so the invariant is exact.
    let mean = values.iter().sum::<f64>() / n as f64;
    for v in values.iter_mut() {
        *v /= mean;
    }
    PsdTemplate::new(values, spec.kind.label())
}

/// Draw one stationary zero-mean complex Gaussian block with the
/// template's PSD: independent complex Gaussians per bin with variance
/// `tpl.values[k]`, then a unitary inverse DFT.
///
/// The returned block's covariance is exactly the circulant implied by the
/// template, its expected periodogram is the template bin-wise, and its
/// expected average power is `P_x`.
pub fn generate_gaussian_signal(
    tpl: &PsdTemplate,
    n_samples: usize,
    sample_rate_hz: f64,
    seed: RngSeed,
) -> Result<SampleBuffer> {
    let n = tpl.n();
    if n_samples != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: n_samples,
        });
    }
    let mut rng = seed.rng();
    let mut data: Vec<Complex64> = tpl
        .values()
        .iter()
        .map(|&v| {
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            // Per-bin variance v split evenly between real and imaginary.
            Complex64::new(g1, g2) * (v / 2.0).sqrt()
        })
        .collect();
    fft::inverse(&mut data);
    let scale = 1.0 / (n as f64).sqrt();
    data.iter_mut().for_each(|c| *c *= scale);
    SampleBuffer::new(data, sample_rate_hz)
}
