//! The four decision statistics and the threshold comparison.
//!
//! All statistics are quadratic in the received block, so scaling the
//! input by `a` scales every statistic by `a^2`; thresholds are always
//! calibrated externally (Monte Carlo under H0), never derived from
//! closed forms. The spectra-correlation detector deliberately takes no
//! noise-power input: not needing the noise level is its practical
//! advantage over the likelihood-ratio forms, and the API keeps that
//! visible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    periodogram, CovarianceModel, PsdTemplate, QuadraticModel, SampleBuffer,
};

/// Largest block length for which the exact likelihood-ratio statistic is
/// offered; it needs a dense Hermitian solve, which is quadratic in memory
/// and cubic in time.
pub const DENSE_LRT_CAP: usize = 4096;

/// Which statistic a harness run evaluates. The serialized names are
/// stable strings used in config files and CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    SpectraCorrelation,
    LrtExact,
    LrtLowSnr,
    Energy,
}

impl DetectorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::SpectraCorrelation => "spectra_correlation",
            DetectorKind::LrtExact => "lrt_exact",
            DetectorKind::LrtLowSnr => "lrt_low_snr",
            DetectorKind::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// A statistic compared against a threshold, with the resulting call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub statistic: f64,
    pub threshold: f64,
    pub hypothesis: Hypothesis,
}

/// Correlate the block's periodogram with the PSD template:
/// `(1/n) sum_k S_Y(k) S_X(k)`. Needs no noise-power estimate.
pub fn stat_spectra_correlation(y: &SampleBuffer, tpl: &PsdTemplate) -> Result<f64> {
    if y.len() != tpl.n() {
        return Err(Error::DimensionMismatch {
            left: tpl.n(),
            right: y.len(),
        });
    }
    let pgram = periodogram(y);
    Ok(pgram
        .values()
        .iter()
        .zip(tpl.values())
        .map(|(p, s)| p * s)
        .sum::<f64>()
        / y.len() as f64)
}

/// Exact quadratic likelihood-ratio statistic
/// `y^H [sigma_v^-2 I - (sigma_v^2 I + Sigma)^-1] y` via a dense Cholesky
/// solve. Only available up to [`DENSE_LRT_CAP`].
pub fn stat_lrt_exact(
    y: &SampleBuffer,
    sigma: &CovarianceModel,
    noise_var: f64,
) -> Result<f64> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise variance must be positive and finite, got {noise_var}"
        )));
    }
    let n = sigma.dimension();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: y.len(),
        });
    }
    if n > DENSE_LRT_CAP {
        return Err(Error::InvalidInput(format!(
            "exact LRT limited to n <= {DENSE_LRT_CAP} (dense solve), got n = {n}"
        )));
    }

    let mut a: DMatrix<Complex64> = sigma.to_dense();
    for i in 0..n {
        a[(i, i)] += Complex64::new(noise_var, 0.0);
    }
    let chol = match a.clone().cholesky() {
        Some(c) => c,
        None => {
            // A is Hermitian with diagonal r(0) + noise_var > 0, so a
            // failed factorization means severe ill-conditioning; report a
            // crude spread estimate for diagnosis.
            let row_max = (0..n)
                .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE);
            return Err(Error::NumericalFailure(format!(
                "Cholesky factorization of the n = {n} covariance failed; \
                 diagonal {:.3e}, max absolute row sum {row_max:.3e}",
                noise_var + sigma.lags()[0].re
            )));
        }
    };

    let yv = DVector::from_column_slice(y.samples());
    let z = chol.solve(&yv);
    let energy: f64 = yv.iter().map(|c| c.norm_sqr()).sum();
    let quad = yv
        .iter()
        .zip(z.iter())
        .map(|(yi, zi)| (yi.conj() * zi).re)
        .sum::<f64>();
    let stat = energy / noise_var - quad;
    if !stat.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "exact LRT produced a non-finite statistic at n = {n}, noise variance {noise_var}"
        )));
    }
    Ok(stat)
}

/// Low-SNR limit of the likelihood-ratio statistic: `(1/n) y^H M y` with
/// `M` the signal covariance (Toeplitz) or its circulant surrogate.
pub fn stat_lrt_low_snr<M: QuadraticModel>(y: &SampleBuffer, model: &M) -> Result<f64> {
    model.quadratic_form(y)
}

/// Energy (radiometer) statistic `(1/n) sum |y(l)|^2`.
pub fn stat_energy(y: &SampleBuffer) -> f64 {
    y.average_power()
}

/// Does the series expansion behind the low-SNR statistic converge?
/// Requires every template eigenvalue below the noise variance. A
/// violation degrades the approximation but not the detector itself, so
/// callers surface this as a warning flag, never an error.
pub fn low_snr_convergence_ok(max_template_value: f64, noise_var: f64) -> bool {
    max_template_value < noise_var
}

/// Threshold comparison; ties resolve to H0, keeping the false-alarm
/// constraint conservative.
pub fn decide(statistic: f64, threshold: f64) -> Result<Decision> {
    if !statistic.is_finite() || !threshold.is_finite() {
        return Err(Error::InvalidInput(format!(
            "decision inputs must be finite, got statistic {statistic}, threshold {threshold}"
        )));
    }
    Ok(Decision {
        statistic,
        threshold,
        hypothesis: if statistic > threshold {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{autocovariance_from_psd, circulant_from_psd};
    use crate::synthesis::{
        generate_gaussian_signal, make_template, RngSeed, TemplateKind, TemplateSpec,
    };
    use num_complex::Complex64;
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
    fn spectra_correlation_flat_template() {
        let y = SampleBuffer::from_real(&[1.0, 1.0, 1.0, 1.0], FS).unwrap();
        let tpl = PsdTemplate::new(vec![1.0; 4], "flat").unwrap();
        assert!((stat_spectra_correlation(&y, &tpl).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectra_correlation_dc_template() {
        let y = SampleBuffer::from_real(&[1.0, 1.0, 1.0, 1.0], FS).unwrap();
        let tpl = PsdTemplate::new(vec![4.0, 0.0, 0.0, 0.0], "dc").unwrap();
        assert!((stat_spectra_correlation(&y, &tpl).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectra_correlation_equals_circulant_quadratic_form() {
        let tpl = random_template(64, 1);
        let y = random_buffer(64, 2);
        let direct = stat_spectra_correlation(&y, &tpl).unwrap();
        let quad = circulant_from_psd(&tpl).quadratic_form(&y).unwrap();
        assert!((direct - quad).abs() <= 1e-9 * direct.abs().max(1e-12));
    }

    #[test]
    fn lrt_exact_zero_covariance_gives_zero() {
        let n = 16;
        let sigma =
            CovarianceModel::from_lags(vec![Complex64::new(0.0, 0.0); n]).unwrap();
        let y = random_buffer(n, 3);
        let stat = stat_lrt_exact(&y, &sigma, 1.0).unwrap();
        assert!(stat.abs() < 1e-10, "stat = {stat}");
    }

    #[test]
    fn lrt_exact_two_by_two_hand_solve() {
        // Sigma = I, noise 1: statistic is (1 - 1/2) * |y|^2 = 0.5 for
        // y = [1, 0].
        let sigma = CovarianceModel::from_lags(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let y = SampleBuffer::from_real(&[1.0, 0.0], FS).unwrap();
        let stat = stat_lrt_exact(&y, &sigma, 1.0).unwrap();
        assert!((stat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lrt_exact_matches_dense_inverse_oracle() {
        let n = 64;
        let fine = random_template(4 * n, 7);
        let sigma = autocovariance_from_psd(&fine).truncated(n).unwrap();
        let y = random_buffer(n, 8);
        let noise_var = 2.5;

        let fast = stat_lrt_exact(&y, &sigma, noise_var).unwrap();

        let mut a = sigma.to_dense();
        for i in 0..n {
            a[(i, i)] += Complex64::new(noise_var, 0.0);
        }
        let inv = a.try_inverse().unwrap();
        let yv = DVector::from_column_slice(y.samples());
        let z = &inv * &yv;
        let oracle = yv.iter().map(|c| c.norm_sqr()).sum::<f64>() / noise_var
            - yv.iter().zip(z.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        assert!((fast - oracle).abs() <= 1e-8 * oracle.abs().max(1e-12));
    }

    #[test]
    fn lrt_exact_rejects_oversized_blocks() {
        let n = DENSE_LRT_CAP + 1;
        let mut lags = vec![Complex64::new(0.0, 0.0); n];
        lags[0] = Complex64::new(1.0, 0.0);
        let sigma = CovarianceModel::from_lags(lags).unwrap();
        let y = SampleBuffer::new(vec![Complex64::new(1.0, 0.0); n], FS).unwrap();
        assert!(matches!(
            stat_lrt_exact(&y, &sigma, 1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn lrt_low_snr_identity_is_energy() {
        let n = 32;
        let mut lags = vec![Complex64::new(0.0, 0.0); n];
        lags[0] = Complex64::new(1.0, 0.0);
        let ident = CovarianceModel::from_lags(lags).unwrap();
        let y = random_buffer(n, 11);
        let stat = stat_lrt_low_snr(&y, &ident).unwrap();
        assert!((stat - stat_energy(&y)).abs() < 1e-12 * stat_energy(&y));
    }

    #[test]
    fn exact_lrt_approaches_scaled_low_snr_form_as_noise_grows() {
        // The exact statistic divided by the noise-variance-squared
        // scaling of its series expansion must approach the quadratic
        // surrogate as noise grows: relative error shrinks monotonically
        // over noise variances 10, 100, 1000.
        let n = 64;
        let fine = random_template(4 * n, 13);
        let sigma = autocovariance_from_psd(&fine).truncated(n).unwrap();
        let y = random_buffer(n, 14);

        let surrogate = n as f64 * stat_lrt_low_snr(&y, &sigma).unwrap();
        let mut errors = Vec::new();
        for noise_var in [10.0, 100.0, 1000.0] {
            let exact = stat_lrt_exact(&y, &sigma, noise_var).unwrap();
            let scaled = surrogate / noise_var.powi(2);
            errors.push((exact - scaled).abs() / exact.abs());
        }
        assert!(
            errors[0] > errors[1] && errors[1] > errors[2],
            "errors not decreasing: {errors:?}"
        );
    }

    #[test]
    fn energy_statistic_basics() {
        let zero = SampleBuffer::new(vec![Complex64::new(0.0, 0.0); 4], FS).unwrap();
        assert_eq!(stat_energy(&zero), 0.0);
        let ones = SampleBuffer::from_real(&[1.0, 1.0, 1.0, 1.0], FS).unwrap();
        assert!((stat_energy(&ones) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_template_correlation_is_scaled_energy() {
        // With a flat template the spectra correlation collapses to
        // P_x times the energy statistic (Parseval).
        let tpl = make_template(&TemplateSpec::new(TemplateKind::Flat, 256)).unwrap();
        let y = random_buffer(256, 17);
        let corr = stat_spectra_correlation(&y, &tpl).unwrap();
        let energy = stat_energy(&y);
        assert!((corr - energy).abs() <= 1e-9 * energy);
    }

    #[test]
    fn convergence_precondition_check() {
        assert!(low_snr_convergence_ok(8.0, 100.0));
        assert!(!low_snr_convergence_ok(100.0, 8.0));
        assert!(!low_snr_convergence_ok(1.0, 1.0));
    }

    #[test]
    fn decide_tie_goes_to_h0() {
        assert_eq!(decide(1.0, 2.0).unwrap().hypothesis, Hypothesis::H0);
        assert_eq!(decide(3.0, 2.0).unwrap().hypothesis, Hypothesis::H1);
        assert_eq!(decide(2.0, 2.0).unwrap().hypothesis, Hypothesis::H0);
        assert!(decide(f64::NAN, 2.0).is_err());
        assert!(decide(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn statistics_scale_quadratically() {
        // Doubling the input must exactly quadruple every statistic
        // (powers of two commute with floating-point arithmetic).
        let n = 128;
        let tpl = make_template(&TemplateSpec::new(TemplateKind::NtscLike, n)).unwrap();
        let fine = make_template(&TemplateSpec::new(TemplateKind::NtscLike, 4 * n)).unwrap();
        let sigma = autocovariance_from_psd(&fine).truncated(n).unwrap();
        let y = generate_gaussian_signal(&tpl, n, FS, RngSeed::new(19)).unwrap();
        let y2 = y.scaled(2.0);

        let pairs = [
            (
                stat_spectra_correlation(&y, &tpl).unwrap(),
                stat_spectra_correlation(&y2, &tpl).unwrap(),
            ),
            (stat_energy(&y), stat_energy(&y2)),
            (
                stat_lrt_low_snr(&y, &sigma).unwrap(),
                stat_lrt_low_snr(&y2, &sigma).unwrap(),
            ),
            (
                stat_lrt_exact(&y, &sigma, 1.0).unwrap(),
                stat_lrt_exact(&y2, &sigma, 1.0).unwrap(),
            ),
        ];
        for (t1, t4) in pairs {
            assert!((t4 / t1 - 4.0).abs() < 1e-12, "ratio {}", t4 / t1);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn statistics_are_nonnegative(seed in 0u64..1_000_000) {
            let n = 48;
            let tpl = random_template(n, seed);
            let fine = random_template(4 * n, seed.wrapping_add(1));
            let sigma = autocovariance_from_psd(&fine).truncated(n).unwrap();
            let y = random_buffer(n, seed.wrapping_add(2));

            prop_assert!(stat_spectra_correlation(&y, &tpl).unwrap() >= -1e-12);
            prop_assert!(stat_energy(&y) >= -1e-12);
            prop_assert!(stat_lrt_low_snr(&y, &sigma).unwrap() >= -1e-12);
            prop_assert!(stat_lrt_exact(&y, &sigma, 1.0).unwrap() >= -1e-12);
        }
    }
}
