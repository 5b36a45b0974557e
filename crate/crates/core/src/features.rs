//! Template quality: how far apart the spectra-correlation statistic sits
//! under the two hypotheses, and which template maximizes that separation
//! under the average-power constraint.
//!
//! Two related quantities appear throughout and are easy to conflate:
//! `objective = sum_k S_X(k)^2`, the quantity maximized by concentrating
//! power, and `gap = objective / n`, the actual difference between the
//! expected statistics under H1 and H0. Both are reported explicitly and
//! nothing here ever swaps one for the other.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::PsdTemplate;
use crate::synthesis::RngSeed;

/// Expected-statistic separation of a template at a given noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationReport {
    /// `E[T | H0] = noise_var * P_x`.
    pub expected_h0: f64,
    /// `E[T | H1] ~= noise_var * P_x + (1/n) sum S_X^2`.
    pub expected_h1: f64,
    /// `expected_h1 - expected_h0 = objective / n`.
    pub gap: f64,
    /// `sum_k S_X(k)^2`, the power-concentration objective.
    pub objective: f64,
}

/// Compute the separation report for a template against a noise variance.
pub fn separation(tpl: &PsdTemplate, noise_var: f64) -> Result<SeparationReport> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise variance must be positive and finite, got {noise_var}"
        )));
    }
    let n = tpl.n() as f64;
    let p_x = tpl.average_power();
    let objective: f64 = tpl.values().iter().map(|v| v * v).sum();
    let gap = objective / n;
    Ok(SeparationReport {
        expected_h0: noise_var * p_x,
        expected_h1: noise_var * p_x + gap,
        gap,
        objective,
    })
}

/// The separation-optimal template under the average-power constraint:
/// all power in one bin. Its objective is `n^2 * p_x^2`, the maximum
/// attainable.
pub fn optimal_template(n: usize, p_x: f64, bin: usize) -> Result<PsdTemplate> {
    if n == 0 {
        return Err(Error::InvalidInput("template needs at least one bin".into()));
    }
    if bin >= n {
        return Err(Error::InvalidInput(format!(
            "bin {bin} out of range for n = {n}"
        )));
    }
    if !(p_x > 0.0 && p_x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "average power must be positive and finite, got {p_x}"
        )));
    }
    let mut values = vec![0.0; n];
    values[bin] = n as f64 * p_x;
    PsdTemplate::new(values, "optimal")
}

/// Outcome of exhaustive grid search over the constraint simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub maximizer: PsdTemplate,
    pub max_objective: f64,
    pub minimizer: PsdTemplate,
    pub min_objective: f64,
    pub grid_points: usize,
}

/// Enumerate the simplex `{S >= 0, sum S = n * p_x}` on a uniform grid and
/// return the extremes of `sum S^2`. Small n only; the grid grows
/// combinatorially. The maximizer must come out a vertex (single-bin) and
/// the minimizer the flat center point.
pub fn brute_force_verify(n: usize, p_x: f64, grid_steps: usize) -> Result<BruteForceResult> {
    if n == 0 || n > 4 {
        return Err(Error::InvalidInput(format!(
            "brute-force search supports 1 <= n <= 4, got n = {n}"
        )));
    }
    if grid_steps < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 grid steps for a meaningful search, got {grid_steps}"
        )));
    }
    if !(p_x > 0.0 && p_x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "average power must be positive and finite, got {p_x}"
        )));
    }

    let total = n as f64 * p_x;
    let step = total / grid_steps as f64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut worst: Option<(f64, Vec<usize>)> = None;
    let mut count = 0usize;

    // Walk all compositions of grid_steps into n nonnegative parts
    // (Nijenhuis-Wilf successor rule).
    let mut parts = vec![0usize; n];
    parts[0] = grid_steps;
    loop {
        count += 1;
        let objective: f64 = parts
            .iter()
            .map(|&c| {
                let v = c as f64 * step;
                v * v
            })
            .sum();
        if best.as_ref().map_or(true, |(b, _)| objective > *b) {
            best = Some((objective, parts.clone()));
        }
        if worst.as_ref().map_or(true, |(w, _)| objective < *w) {
            worst = Some((objective, parts.clone()));
        }

        if parts[n - 1] == grid_steps {
            break;
        }
        let i = parts
            .iter()
            .position(|&c| c > 0)
            .expect("parts always sum to grid_steps > 0");
        let v = parts[i];
        parts[i] = 0;
        parts[0] = v - 1;
        parts[i + 1] += 1;
    }

    let (max_objective, max_parts) = best.expect("at least one grid point");
    let (min_objective, min_parts) = worst.expect("at least one grid point");
    let to_template = |parts: &[usize], label: &str| {
        PsdTemplate::new(parts.iter().map(|&c| c as f64 * step).collect(), label)
    };
    Ok(BruteForceResult {
        maximizer: to_template(&max_parts, "grid_max")?,
        max_objective,
        minimizer: to_template(&min_parts, "grid_min")?,
        min_objective,
        grid_points: count,
    })
}

/// Draw a random template uniformly from the constraint simplex
/// (symmetric Dirichlet): n exponentials normalized to total power
/// `n * p_x`.
pub fn random_simplex_template(n: usize, p_x: f64, seed: RngSeed) -> Result<PsdTemplate> {
    if n == 0 {
        return Err(Error::InvalidInput("template needs at least one bin".into()));
    }
    if !(p_x > 0.0 && p_x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "average power must be positive and finite, got {p_x}"
        )));
    }
    let mut rng = seed.rng();
    let draws: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    let scale = n as f64 * p_x / total;
    PsdTemplate::new(draws.iter().map(|e| e * scale).collect(), "simplex")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SampleBuffer;
    use crate::synthesis::{make_template, TemplateKind, TemplateSpec};

    #[test]
    fn flat_template_objective_is_n() {
        let tpl = make_template(&TemplateSpec::new(TemplateKind::Flat, 16)).unwrap();
        let rep = separation(&tpl, 1.0).unwrap();
        assert_eq!(rep.objective, 16.0);
        assert_eq!(rep.gap, 1.0);
        assert!((rep.expected_h0 - 1.0).abs() < 1e-12);
        assert!((rep.expected_h1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_bin_objective_is_n_squared() {
        let tpl = make_template(&TemplateSpec::new(TemplateKind::SingleBin, 16)).unwrap();
        let rep = separation(&tpl, 1.0).unwrap();
        assert_eq!(rep.objective, 256.0);
        assert_eq!(rep.gap, 16.0);
    }

    #[test]
    fn gap_times_n_equals_objective_exactly() {
        for seed in 0..20 {
            let tpl = random_simplex_template(64, 1.0, RngSeed::new(seed)).unwrap();
            let rep = separation(&tpl, 2.0).unwrap();
            assert_eq!(rep.gap * 64.0, rep.objective);
            assert!((rep.expected_h1 - rep.expected_h0 - rep.gap).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_bounds_on_random_simplex_templates() {
        // Cauchy-Schwarz lower bound (flat) and vertex upper bound
        // (single bin) on 1000 random templates.
        let n = 32;
        let p_x = 1.0;
        for trial in 0..1000u32 {
            let tpl = random_simplex_template(n, p_x, RngSeed::new(99).derive(0, trial)).unwrap();
            let obj = separation(&tpl, 1.0).unwrap().objective;
            let lo = n as f64 * p_x * p_x;
            let hi = (n as f64 * p_x).powi(2);
            assert!(
                obj >= lo - 1e-9 && obj <= hi + 1e-9,
                "objective {obj} outside [{lo}, {hi}]"
            );
            assert!((tpl.average_power() - p_x).abs() < 1e-9);
        }
    }

    #[test]
    fn optimal_template_matches_closed_form() {
        let tpl = optimal_template(8, 1.0, 0).unwrap();
        assert_eq!(tpl.values(), &[8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(separation(&tpl, 1.0).unwrap().objective, 64.0);

        let shifted = optimal_template(8, 1.0, 3).unwrap();
        assert_eq!(shifted.values()[3], 8.0);
        assert_eq!(separation(&shifted, 1.0).unwrap().objective, 64.0);

        assert!(optimal_template(8, 1.0, 8).is_err());
        assert!(optimal_template(0, 1.0, 0).is_err());
        assert!(optimal_template(8, -1.0, 0).is_err());
    }

    #[test]
    fn brute_force_finds_vertex_maximizer_and_flat_minimizer() {
        let res = brute_force_verify(3, 1.0, 30).unwrap();
        // The vertex is itself a grid point, so the maximizer is exact.
        let nonzero: Vec<&f64> = res.maximizer.values().iter().filter(|v| **v > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((res.max_objective - 9.0).abs() < 1e-9);

        // Minimizer is the flat center (grid_steps divisible by n here).
        for v in res.minimizer.values() {
            assert!((v - 1.0).abs() < 1e-9);
        }
        assert!((res.min_objective - 3.0).abs() < 1e-9);

        // Composition count of 30 into 3 parts.
        assert_eq!(res.grid_points, 32 * 31 / 2);
    }

    #[test]
    fn brute_force_two_bins() {
        let res = brute_force_verify(2, 1.0, 20).unwrap();
        assert!((res.max_objective - 4.0).abs() < 1e-9);
        let vals = res.maximizer.values();
        assert!(
            (vals[0] == 2.0 && vals[1] == 0.0) || (vals[0] == 0.0 && vals[1] == 2.0),
            "maximizer {vals:?} is not a vertex"
        );
    }

    #[test]
    fn brute_force_validates_inputs() {
        assert!(brute_force_verify(5, 1.0, 30).is_err());
        assert!(brute_force_verify(3, 1.0, 5).is_err());
        assert!(brute_force_verify(3, 0.0, 30).is_err());
    }

    #[test]
    fn built_in_template_ordering() {
        // Sharper spectral features concentrate more power per bin, so the
        // separation objective must order the built-ins the same way at
        // every workable resolution.
        for n in [256, 1024, 4096] {
            let obj = |kind: TemplateKind| {
                let tpl = make_template(&TemplateSpec::new(kind, n)).unwrap();
                separation(&tpl, 1.0).unwrap().objective
            };
            let single = obj(TemplateKind::SingleBin);
            let ntsc = obj(TemplateKind::NtscLike);
            let atsc = obj(TemplateKind::AtscLike);
            let flat = obj(TemplateKind::Flat);
            assert!(
                single > ntsc && ntsc > atsc && atsc > flat,
                "ordering violated at n={n}: single={single:.1} ntsc={ntsc:.1} atsc={atsc:.1} flat={flat:.1}"
            );
        }
    }

    #[test]
    fn empirical_statistic_gap_matches_report() {
        // Monte Carlo oracle: the mean spectra-correlation statistic under
        // H1 minus the mean under H0 approaches the reported gap. Moderate
        // SNR (0 dB) keeps estimator variance workable at 5000 trials.
        use crate::channel::{add_awgn, AwgnSpec};
        use crate::detectors::stat_spectra_correlation;
        use crate::synthesis::generate_gaussian_signal;

        let n = 256;
        let tpl = make_template(&TemplateSpec::new(TemplateKind::NtscLike, n)).unwrap();
        let noise = AwgnSpec::new(0.0);
        let trials = 5000u32;

        let mut sum_h1 = 0.0;
        let mut sum_h0 = 0.0;
        for t in 0..trials {
            let x = generate_gaussian_signal(&tpl, n, 6e6, RngSeed::new(5).derive(1, t)).unwrap();
            let y1 = add_awgn(&x, &noise, RngSeed::new(5).derive(2, t));
            sum_h1 += stat_spectra_correlation(&y1, &tpl).unwrap();

            let zero = SampleBuffer::new(vec![num_complex::Complex64::new(0.0, 0.0); n], 6e6)
                .unwrap();
            let y0 = add_awgn(&zero, &noise, RngSeed::new(5).derive(3, t));
            sum_h0 += stat_spectra_correlation(&y0, &tpl).unwrap();
        }
        let empirical = (sum_h1 - sum_h0) / trials as f64;
        let gap = separation(&tpl, noise.noise_var()).unwrap().gap;
        assert!(
            (empirical / gap - 1.0).abs() < 0.05,
            "empirical gap {empirical} vs analytic {gap}"
        );
    }
}
