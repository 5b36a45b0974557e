//! Discrete-frequency spectral primitives.
//!
//! Everything downstream (detectors, synthesis, experiments) is built on the
//! conventions fixed here:
//!
//! - the periodogram of an n-point block is `|DFT(y)[k]|^2 / n` with the
//!   unnormalized DFT, so the mean periodogram of unit-variance white noise
//!   is 1.0 per bin and Parseval reads
//!   `(1/n) sum_k S_Y(k) = (1/n) sum_l |y(l)|^2`;
//! - matrix identities use the unitary DFT, which makes
//!   `(1/n) y^H C y = (1/n) sum_k lambda_k S_Y(k)` hold exactly for a
//!   circulant `C` with eigenvalues `lambda`;
//! - a stationary covariance is stored as its first-row lag sequence, never
//!   densely except in small test oracles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// A block of complex baseband samples with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl SampleBuffer {
    /// Wrap samples, rejecting empty buffers, non-finite samples and
    /// non-positive sample rates.
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empty sample buffer".into()));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::InvalidInput(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Convenience constructor for purely real sample vectors.
    pub fn from_real(samples: &[f64], sample_rate_hz: f64) -> Result<Self> {
        Self::new(
            samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            sample_rate_hz,
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty buffers
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Time-domain average power `(1/n) sum |y(l)|^2`.
    pub fn average_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// A copy with every sample multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> SampleBuffer {
        SampleBuffer {
            samples: self.samples.iter().map(|s| s * alpha).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Split into `blocks` equal contiguous blocks.
    pub fn split_blocks(&self, blocks: usize) -> Result<Vec<SampleBuffer>> {
        if blocks == 0 || self.len() % blocks != 0 {
            return Err(Error::InvalidInput(format!(
                "cannot split {} samples into {} equal blocks",
                self.len(),
                blocks
            )));
        }
        let len = self.len() / blocks;
        Ok(self
            .samples
            .chunks(len)
            .map(|c| SampleBuffer {
                samples: c.to_vec(),
                sample_rate_hz: self.sample_rate_hz,
            })
            .collect())
    }
}

/// An a-priori sampled power spectral density of the primary signal:
/// n nonnegative bin powers, normalized so that the bin average is the
/// signal's average power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdTemplate {
    values: Vec<f64>,
    label: String,
}

impl PsdTemplate {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty PSD template".into()));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "PSD template bin {i} is negative or non-finite: {}",
                values[i]
            )));
        }
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Average power `P_x = (1/n) sum_k values[k]`.
    pub fn average_power(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// A copy with every bin multiplied by `factor` (rescales `P_x` by the
    /// same factor).
    pub fn scaled(&self, factor: f64) -> Result<PsdTemplate> {
        PsdTemplate::new(
            self.values.iter().map(|v| v * factor).collect(),
            self.label.clone(),
        )
    }

    /// Resample to `n` bins by nearest-bin lookup on the normalized
    /// frequency axis, then rescale so the average power is preserved.
    pub fn resample(&self, n: usize) -> Result<PsdTemplate> {
        if n == 0 {
            return Err(Error::InvalidInput("cannot resample to 0 bins".into()));
        }
        let src_n = self.values.len();
        let mut values: Vec<f64> = (0..n)
            .map(|k| {
                let pos = k as f64 / n as f64 * src_n as f64;
                let idx = (pos.round() as usize) % src_n;
                self.values[idx]
            })
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        if mean > 0.0 {
            let scale = self.average_power() / mean;
            for v in values.iter_mut() {
                *v *= scale;
            }
        }
        PsdTemplate::new(values, self.label.clone())
    }
}

/// Periodogram of one received block: n nonnegative bin powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    values: Vec<f64>,
}

impl Periodogram {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(1/n) sum_k values[k]`; equals the block's time-domain average
    /// power by Parseval.
    pub fn average_power(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Periodogram estimate `S_Y(k) = |sum_l y(l) e^{-j 2 pi k l / n}|^2 / n`.
pub fn periodogram(buf: &SampleBuffer) -> Periodogram {
    let mut data = buf.samples().to_vec();
    fft::forward(&mut data);
    let n = data.len() as f64;
    Periodogram {
        values: data.iter().map(|c| c.norm_sqr() / n).collect(),
    }
}

/// Stationary covariance stored as its lag sequence `r(0..n-1)`; the implied
/// matrix is Hermitian Toeplitz with `r` down the first column.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    autocov: Vec<Complex64>,
}

impl CovarianceModel {
    /// Build from a lag sequence. `r(0)` must be real and nonnegative and
    /// no lag magnitude may exceed it (up to rounding slack).
    pub fn from_lags(autocov: Vec<Complex64>) -> Result<Self> {
        if autocov.is_empty() {
            return Err(Error::InvalidInput("empty lag sequence".into()));
        }
        let r0 = autocov[0];
        if !(r0.re.is_finite() && r0.re >= 0.0) || r0.im.abs() > 1e-9 * r0.re.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "r(0) must be real and nonnegative, got {r0}"
            )));
        }
        let slack = 1e-9 * r0.re.max(1.0);
        if let Some(m) = autocov.iter().position(|r| r.norm() > r0.re + slack) {
            return Err(Error::InvalidInput(format!(
                "|r({m})| = {} exceeds r(0) = {}",
                autocov[m].norm(),
                r0.re
            )));
        }
        Ok(Self { autocov })
    }

    pub fn dimension(&self) -> usize {
        self.autocov.len()
    }

    pub fn lags(&self) -> &[Complex64] {
        &self.autocov
    }

    /// Leading principal submatrix: the same process observed over a
    /// shorter window.
    pub fn truncated(&self, n: usize) -> Result<CovarianceModel> {
        if n == 0 || n > self.autocov.len() {
            return Err(Error::InvalidInput(format!(
                "cannot truncate {}-lag model to {n} lags",
                self.autocov.len()
            )));
        }
        Ok(CovarianceModel {
            autocov: self.autocov[..n].to_vec(),
        })
    }

    /// Materialize the dense Toeplitz matrix. Test/oracle use only; memory
    /// is quadratic in the dimension.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let n = self.autocov.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i >= j {
                self.autocov[i - j]
            } else {
                self.autocov[j - i].conj()
            }
        })
    }
}

/// Circulant covariance surrogate, stored by its eigenvalues (the sampled
/// PSD); the matrix is `W^H diag(eigenvalues) W` with `W` the unitary DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantModel {
    eigenvalues: Vec<f64>,
}

impl CirculantModel {
    pub fn from_eigenvalues(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidInput("empty eigenvalue list".into()));
        }
        if let Some(k) = eigenvalues
            .iter()
            .position(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "circulant eigenvalue {k} is negative or non-finite"
            )));
        }
        Ok(Self { eigenvalues })
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// First column of the materialized matrix: the inverse DFT of the
    /// eigenvalues, i.e. the circularly aliased lag sequence.
    pub fn first_column(&self) -> Vec<Complex64> {
        let n = self.eigenvalues.len();
        let mut data: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft::inverse(&mut data);
        data.iter_mut().for_each(|c| *c /= n as f64);
        data
    }

    /// Materialize the dense circulant matrix. Test/oracle use only.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let col = self.first_column();
        let n = col.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| col[(n + i - j) % n])
    }
}

/// Lag sequence `r(m) = (1/n) sum_k S(k) e^{+j 2 pi k m / n}` of the sampled
/// PSD; bridges the template to the Toeplitz covariance it implies.
pub fn autocovariance_from_psd(tpl: &PsdTemplate) -> CovarianceModel {
    let n = tpl.n();
    let mut data: Vec<Complex64> = tpl
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft::inverse(&mut data);
    data.iter_mut().for_each(|c| *c /= n as f64);
    // r(0) is a mean of nonnegative reals; clamp the rounding dust so the
    // validator sees it as exactly real.
    data[0] = Complex64::new(data[0].re.max(0.0), 0.0);
    CovarianceModel::from_lags(data).expect("PSD-derived lags satisfy the lag invariants")
}

/// Circulant surrogate whose eigenvalues are the template bins.
pub fn circulant_from_psd(tpl: &PsdTemplate) -> CirculantModel {
    CirculantModel::from_eigenvalues(tpl.values().to_vec())
        .expect("template invariants imply valid eigenvalues")
}

/// Weak (Hilbert-Schmidt) norm of the difference between the Toeplitz
/// matrix and the circulant surrogate,
/// `sqrt((1/n) sum_{i,j} |Sigma_ij - C_ij|^2)`.
///
/// Computed in the lag domain: along each diagonal `d` the entry difference
/// is constant with magnitude `|r(d) - c(d)|`, so the double sum collapses
/// to a single pass over lags.
pub fn weak_norm_diff(sigma: &CovarianceModel, circ: &CirculantModel) -> Result<f64> {
    let n = sigma.dimension();
    if n != circ.dimension() {
        return Err(Error::DimensionMismatch {
            left: n,
            right: circ.dimension(),
        });
    }
    let aliased = circ.first_column();
    let mut sum = n as f64 * (sigma.autocov[0] - aliased[0]).norm_sqr();
    for d in 1..n {
        let delta = (sigma.autocov[d] - aliased[d]).norm_sqr();
        sum += 2.0 * (n - d) as f64 * delta;
    }
    Ok((sum / n as f64).sqrt())
}

/// A covariance-like operator supporting the normalized quadratic form
/// `(1/n) y^H M y`.
pub trait QuadraticModel {
    fn dimension(&self) -> usize;

    /// `(1/n) y^H M y`, real-valued: `M` is Hermitian positive
    /// semidefinite, so the form is nonnegative up to rounding.
    fn quadratic_form(&self, y: &SampleBuffer) -> Result<f64>;
}

impl QuadraticModel for CovarianceModel {
    fn dimension(&self) -> usize {
        self.autocov.len()
    }

    fn quadratic_form(&self, y: &SampleBuffer) -> Result<f64> {
        let n = self.autocov.len();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: y.len(),
            });
        }
        let my = toeplitz_matvec(&self.autocov, y.samples());
        let acc: Complex64 = y
            .samples()
            .iter()
            .zip(my.iter())
            .map(|(yi, zi)| yi.conj() * zi)
            .sum();
        Ok(acc.re / n as f64)
    }
}

impl QuadraticModel for CirculantModel {
    fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    fn quadratic_form(&self, y: &SampleBuffer) -> Result<f64> {
        let n = self.eigenvalues.len();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: y.len(),
            });
        }
        // With the unitary DFT diagonalization the form is exactly the
        // bin-wise correlation of the periodogram with the eigenvalues.
        let pgram = periodogram(y);
        Ok(self
            .eigenvalues
            .iter()
            .zip(pgram.values())
            .map(|(l, p)| l * p)
            .sum::<f64>()
            / n as f64)
    }
}

/// Hermitian-Toeplitz matrix-vector product via embedding in a circulant of
/// size 2n; O(n log n).
fn toeplitz_matvec(lags: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let n = lags.len();
    let big = 2 * n;
    // First column of the embedding: positive lags, a zero gap, then the
    // conjugated lags reversed.
    let mut col = vec![Complex64::new(0.0, 0.0); big];
    col[..n].copy_from_slice(lags);
    for d in 1..n {
        col[big - d] = lags[d].conj();
    }
    fft::forward(&mut col);

    let mut vec = vec![Complex64::new(0.0, 0.0); big];
    vec[..n].copy_from_slice(y);
    fft::forward(&mut vec);

    for (v, c) in vec.iter_mut().zip(col.iter()) {
        *v *= c;
    }
    fft::inverse(&mut vec);
    vec.truncate(n);
    let scale = 1.0 / big as f64;
    vec.iter_mut().for_each(|v| *v *= scale);
    vec
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const FS: f64 = 6e6;

    fn random_buffer(n: usize, seed: u64) -> SampleBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        SampleBuffer::new(samples, FS).unwrap()
    }

    fn random_template(n: usize, seed: u64) -> PsdTemplate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0).collect();
        PsdTemplate::new(values, "random").unwrap()
    }

    #[test]
    fn rejects_empty_buffer() {
        assert!(matches!(
            SampleBuffer::new(vec![], FS),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rejects_non_finite_sample() {
        let s = vec![Complex64::new(f64::NAN, 0.0)];
        assert!(SampleBuffer::new(s, FS).is_err());
    }

    #[test]
    fn periodogram_of_dc_block() {
        let buf = SampleBuffer::from_real(&[1.0, 1.0, 1.0, 1.0], FS).unwrap();
        let p = periodogram(&buf);
        assert!((p.values()[0] - 4.0).abs() < 1e-12);
        for k in 1..4 {
            assert!(p.values()[k].abs() < 1e-12);
        }
    }

    #[test]
    fn periodogram_of_impulse_is_flat() {
        let buf = SampleBuffer::from_real(&[1.0, 0.0, 0.0, 0.0], FS).unwrap();
        let p = periodogram(&buf);
        for k in 0..4 {
            assert!((p.values()[k] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn periodogram_mean_matches_noise_variance() {
        // Sample-mean oracle: white complex Gaussian with variance 2 has a
        // flat PSD at 2.0; the averaged periodogram must land within +-10%
        // in every bin.
        let n = 256;
        let blocks = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut acc = vec![0.0; n];
        for _ in 0..blocks {
            let samples: Vec<Complex64> = (0..n)
                .map(|_| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
                .collect();
            let p = periodogram(&SampleBuffer::new(samples, FS).unwrap());
            for (a, v) in acc.iter_mut().zip(p.values()) {
                *a += v;
            }
        }
        for a in acc.iter() {
            let mean = a / blocks as f64;
            assert!(
                (mean - 2.0).abs() < 0.2,
                "bin mean {mean} outside 2.0 +- 10%"
            );
        }
    }

    #[test]
    fn autocov_of_flat_template_is_impulse() {
        let tpl = PsdTemplate::new(vec![3.5; 16], "flat").unwrap();
        let cov = autocovariance_from_psd(&tpl);
        assert!((cov.lags()[0] - Complex64::new(3.5, 0.0)).norm() < 1e-12);
        for m in 1..16 {
            assert!(cov.lags()[m].norm() < 1e-12, "lag {m} not zero");
        }
    }

    #[test]
    fn autocov_of_single_bin_template_is_constant() {
        let n = 8;
        let mut values = vec![0.0; n];
        values[0] = n as f64 * 2.0; // P_x = 2
        let tpl = PsdTemplate::new(values, "single-bin").unwrap();
        let cov = autocovariance_from_psd(&tpl);
        for m in 0..n {
            assert!((cov.lags()[m] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn toeplitz_trace_is_n_times_average_power() {
        // Direct-summation oracle at n = 8.
        let tpl = random_template(8, 3);
        let cov = autocovariance_from_psd(&tpl);
        let dense = cov.to_dense();
        let trace: Complex64 = (0..8).map(|i| dense[(i, i)]).sum();
        let expected = 8.0 * tpl.average_power();
        assert!((trace.re - expected).abs() < 1e-9 * expected);
        assert!(trace.im.abs() < 1e-12);
    }

    #[test]
    fn circulant_of_flat_template_is_scaled_identity() {
        let tpl = PsdTemplate::new(vec![2.0; 6], "flat").unwrap();
        let dense = circulant_from_psd(&tpl).to_dense();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 2.0 } else { 0.0 };
                assert!((dense[(i, j)] - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn circulant_of_dc_template_is_all_ones() {
        // W^H diag([4,0,0,0]) W materialized by hand gives the all-ones
        // matrix at n = 4.
        let tpl = PsdTemplate::new(vec![4.0, 0.0, 0.0, 0.0], "dc").unwrap();
        let dense = circulant_from_psd(&tpl).to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert!((dense[(i, j)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn circulant_is_hermitian_and_first_column_matches_lags() {
        let tpl = random_template(12, 11);
        let circ = circulant_from_psd(&tpl);
        let dense = circ.to_dense();
        for i in 0..12 {
            for j in 0..12 {
                assert!((dense[(i, j)] - dense[(j, i)].conj()).norm() < 1e-12);
            }
        }
        // A Hermitian circulant carries the lag sequence down its first
        // column.
        let cov = autocovariance_from_psd(&tpl);
        for i in 0..12 {
            assert!((dense[(i, 0)] - cov.lags()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn circulant_round_trip_recovers_eigenvalues() {
        // Diagonalize the materialized matrix by the DFT: eigenvalue k is
        // the forward DFT of the first column.
        let n = 128;
        let tpl = random_template(n, 5);
        let circ = circulant_from_psd(&tpl);
        let mut col = circ.first_column();
        fft::forward(&mut col);
        for (k, v) in tpl.values().iter().enumerate() {
            assert!(
                (col[k].re - v).abs() < 1e-9 * v.max(1.0) && col[k].im.abs() < 1e-9,
                "bin {k}: {} vs {v}",
                col[k]
            );
        }
    }

    #[test]
    fn toeplitz_eigenvalues_nonnegative_small_n() {
        // Spot check of positive semidefiniteness at small n.
        for seed in 0..4 {
            let tpl = random_template(24, 100 + seed);
            let dense = autocovariance_from_psd(&tpl).to_dense();
            let eig = nalgebra::SymmetricEigen::new(dense);
            for v in eig.eigenvalues.iter() {
                assert!(*v > -1e-9, "negative eigenvalue {v}");
            }
        }
    }

    #[test]
    fn weak_norm_of_flat_template_is_zero() {
        let tpl = PsdTemplate::new(vec![1.5; 32], "flat").unwrap();
        let wn = weak_norm_diff(&autocovariance_from_psd(&tpl), &circulant_from_psd(&tpl)).unwrap();
        assert!(wn < 1e-12);
    }

    #[test]
    fn weak_norm_of_matching_models_is_zero() {
        // The Toeplitz matrix built from a template's own n-point lags IS
        // its circulant (the lag sequence is n-periodic), so the norm
        // vanishes for any template.
        let tpl = random_template(40, 9);
        let wn = weak_norm_diff(&autocovariance_from_psd(&tpl), &circulant_from_psd(&tpl)).unwrap();
        assert!(wn < 1e-10, "wn = {wn}");
    }

    #[test]
    fn weak_norm_matches_dense_oracle() {
        // Truncate a higher-resolution lag sequence so the two models
        // genuinely differ, then check the lag-domain formula against the
        // dense double sum.
        let n = 48;
        let fine = random_template(4 * n, 21);
        let sigma = autocovariance_from_psd(&fine).truncated(n).unwrap();
        let circ = circulant_from_psd(&fine.resample(n).unwrap());
        let fast = weak_norm_diff(&sigma, &circ).unwrap();

        let ds = sigma.to_dense();
        let dc = circ.to_dense();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += (ds[(i, j)] - dc[(i, j)]).norm_sqr();
            }
        }
        let dense = (sum / n as f64).sqrt();
        assert!(
            (fast - dense).abs() <= 1e-9 * dense.max(1e-12),
            "{fast} vs {dense}"
        );
        assert!(fast > 1e-3, "models unexpectedly close");
    }

    #[test]
    fn weak_norm_dimension_mismatch() {
        let a = autocovariance_from_psd(&random_template(8, 1));
        let b = circulant_from_psd(&random_template(16, 2));
        assert!(matches!(
            weak_norm_diff(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_form_identity_matrix_is_energy() {
        let y = random_buffer(64, 13);
        let ident = CovarianceModel::from_lags({
            let mut l = vec![Complex64::new(0.0, 0.0); 64];
            l[0] = Complex64::new(1.0, 0.0);
            l
        })
        .unwrap();
        let q = ident.quadratic_form(&y).unwrap();
        assert!((q - y.average_power()).abs() < 1e-12 * y.average_power());
    }

    #[test]
    fn quadratic_form_of_zero_vector_is_zero() {
        let y = SampleBuffer::new(vec![Complex64::new(0.0, 0.0); 16], FS).unwrap();
        let tpl = random_template(16, 17);
        assert_eq!(circulant_from_psd(&tpl).quadratic_form(&y).unwrap(), 0.0);
        assert_eq!(
            autocovariance_from_psd(&tpl).quadratic_form(&y).unwrap(),
            0.0
        );
    }

    #[test]
    fn toeplitz_quadratic_form_matches_dense_oracle() {
        let n = 64;
        let fine = random_template(4 * n, 31);
        let cov = autocovariance_from_psd(&fine).truncated(n).unwrap();
        let y = random_buffer(n, 37);

        let fast = cov.quadratic_form(&y).unwrap();
        let dense = cov.to_dense();
        let yv = nalgebra::DVector::from_column_slice(y.samples());
        let oracle = (yv.adjoint() * &dense * &yv)[(0, 0)].re / n as f64;
        assert!((fast - oracle).abs() <= 1e-9 * oracle.abs().max(1e-12));
    }

    #[test]
    fn circulant_quadratic_form_matches_dense_oracle() {
        let n = 64;
        let tpl = random_template(n, 41);
        let circ = circulant_from_psd(&tpl);
        let y = random_buffer(n, 43);

        let fast = circ.quadratic_form(&y).unwrap();
        let dense = circ.to_dense();
        let yv = nalgebra::DVector::from_column_slice(y.samples());
        let oracle = (yv.adjoint() * &dense * &yv)[(0, 0)].re / n as f64;
        assert!((fast - oracle).abs() <= 1e-9 * oracle.abs().max(1e-12));
    }

    #[test]
    fn frequency_time_identity() {
        // (1/n) sum_k S_X(k) S_Y(k) computed bin-wise equals the circulant
        // quadratic form; the finite-n skeleton of the asymptotic
        // equivalence argument.
        let n = 128;
        let tpl = random_template(n, 51);
        let y = random_buffer(n, 53);
        let pgram = periodogram(&y);
        let binwise = tpl
            .values()
            .iter()
            .zip(pgram.values())
            .map(|(s, p)| s * p)
            .sum::<f64>()
            / n as f64;
        let quad = circulant_from_psd(&tpl).quadratic_form(&y).unwrap();
        assert!((binwise - quad).abs() <= 1e-9 * binwise.abs().max(1e-12));
    }

    #[test]
    fn resample_preserves_average_power() {
        let tpl = random_template(96, 61);
        for n in [32, 48, 96, 192] {
            let r = tpl.resample(n).unwrap();
            assert_eq!(r.n(), n);
            assert!((r.average_power() - tpl.average_power()).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_identity_when_same_n() {
        let tpl = random_template(64, 67);
        let r = tpl.resample(64).unwrap();
        for (a, b) in r.values().iter().zip(tpl.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parseval_holds_for_any_buffer(seed in 0u64..1_000_000, n in 1usize..300) {
            let buf = random_buffer(n, seed);
            let p = periodogram(&buf);
            let time = buf.average_power();
            let freq = p.average_power();
            prop_assert!((time - freq).abs() <= 1e-9 * time.max(1e-12));
        }

        #[test]
        fn quadratic_form_is_nonnegative(seed in 0u64..1_000_000) {
            let tpl = random_template(32, seed);
            let y = random_buffer(32, seed.wrapping_add(1));
            let q = circulant_from_psd(&tpl).quadratic_form(&y).unwrap();
            prop_assert!(q >= -1e-12);
            let t = autocovariance_from_psd(&tpl).quadratic_form(&y).unwrap();
            prop_assert!(t >= -1e-12);
        }
    }
}
