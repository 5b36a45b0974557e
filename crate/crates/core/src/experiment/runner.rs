//! Monte Carlo execution: threshold calibration under H0, missed-detection
//! sweeps, covariance-equivalence tables, and template-ordering tables.
//!
//! Reproducibility rules all of this. Every random draw comes from a
//! stream derived from (base seed, purpose, block, trial), so any trial
//! can be replayed in isolation and trial order never matters. Seeds do
//! not depend on SNR or channel: sweep points share their signal and
//! noise realizations, which turns rate comparisons across SNR or across
//! channels into paired comparisons.

use std::fs;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{add_awgn, apply_pedb, AwgnSpec, PedBProfile};
use crate::detectors::{
    decide, low_snr_convergence_ok, stat_energy, stat_lrt_exact, stat_lrt_low_snr,
    stat_spectra_correlation, DetectorKind, Hypothesis,
};
use crate::error::{Error, Result};
use crate::features::separation;
use crate::io::load_pdp;
use crate::plot::{write_chart, ChartSpec, Series};
use crate::spectral::{
    autocovariance_from_psd, circulant_from_psd, weak_norm_diff, CovarianceModel, PsdTemplate,
    SampleBuffer,
};
use crate::synthesis::{generate_gaussian_signal, make_template, RngSeed};

use super::config::{ChannelKind, ExperimentConfig, TemplateConfig};
use super::report::{
    write_metadata, EquivalenceRow, ExperimentResult, FeatureRow, RunMetadata, StreamingCsv,
    SweepRow,
};

/// Noise variance every statistic is calibrated against. Signal strength
/// is swept by scaling the signal, not the noise, so one calibrated
/// threshold serves an entire SNR sweep.
const REFERENCE_NOISE_VAR: f64 = 1.0;

/// Oversampling factor for the Toeplitz covariance used by the
/// likelihood-ratio detectors: lags are taken from a template sampled this
/// many times finer than the block, then truncated to the block length.
const COVARIANCE_OVERSAMPLE: usize = 16;

/// Purpose tags for derived seed streams. Block index is packed next to
/// the purpose, so streams stay distinct for every
/// (purpose, block, trial) triple.
mod purpose {
    pub const SIGNAL: u32 = 1;
    pub const NOISE: u32 = 2;
    pub const FADING: u32 = 3;
    pub const CAL_NOISE: u32 = 4;
    pub const PFA_NOISE: u32 = 5;
    pub const EQ_SIGNAL: u32 = 6;
    pub const EQ_NOISE: u32 = 7;
}

fn stream(base: RngSeed, purpose: u32, block: u32, trial: u32) -> RngSeed {
    base.derive(purpose * 32 + block, trial)
}

fn snr_to_amplitude(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 20.0)
}

/// Evaluates the configured statistic on one detection interval.
pub(crate) struct StatEvaluator {
    detector: DetectorKind,
    tpl: PsdTemplate,
    sigma: Option<CovarianceModel>,
    zero_block: SampleBuffer,
    block_len: usize,
    blocks: usize,
    sample_rate_hz: f64,
}

impl StatEvaluator {
    fn build(cfg: &ExperimentConfig, template: &TemplateConfig) -> Result<Self> {
        let block_len = cfg.block_len();
        let tpl = make_template(&template.spec_with_n(block_len))?;
        let sigma = match cfg.detector {
            DetectorKind::LrtExact | DetectorKind::LrtLowSnr => {
                // The Toeplitz covariance of the underlying process over a
                // finite window: lags of the near-asymptotic sampling,
                // truncated to the block.
                let fine = make_template(&template.spec_with_n(COVARIANCE_OVERSAMPLE * block_len))?;
                Some(autocovariance_from_psd(&fine).truncated(block_len)?)
            }
            _ => None,
        };
        let zero_block = SampleBuffer::new(
            vec![num_complex::Complex64::new(0.0, 0.0); block_len],
            cfg.sample_rate_hz,
        )?;
        Ok(Self {
            detector: cfg.detector,
            tpl,
            sigma,
            zero_block,
            block_len,
            blocks: cfg.block_count(),
            sample_rate_hz: cfg.sample_rate_hz,
        })
    }

    pub(crate) fn template(&self) -> &PsdTemplate {
        &self.tpl
    }

    fn block_statistic(&self, y: &SampleBuffer) -> Result<f64> {
        match self.detector {
            DetectorKind::SpectraCorrelation => stat_spectra_correlation(y, &self.tpl),
            DetectorKind::Energy => Ok(stat_energy(y)),
            DetectorKind::LrtLowSnr => {
                stat_lrt_low_snr(y, self.sigma.as_ref().expect("built for LRT"))
            }
            DetectorKind::LrtExact => stat_lrt_exact(
                y,
                self.sigma.as_ref().expect("built for LRT"),
                REFERENCE_NOISE_VAR,
            ),
        }
    }

    /// Statistic of one noise-only interval.
    fn h0_statistic(&self, base: RngSeed, noise_purpose: u32, trial: u32) -> Result<f64> {
        let mut acc = 0.0;
        for b in 0..self.blocks {
            let seed = stream(base, noise_purpose, b as u32, trial);
            let y = add_awgn(&self.zero_block, &AwgnSpec::new(0.0), seed);
            acc += self.block_statistic(&y)?;
        }
        Ok(acc / self.blocks as f64)
    }

    /// Statistic of one signal-plus-noise interval at amplitude `alpha`
    /// relative to the unit-power template, optionally through fading.
    /// Fading coefficients are drawn once per interval (block fading).
    fn h1_statistic(
        &self,
        base: RngSeed,
        trial: u32,
        alpha: f64,
        fading: Option<&PedBProfile>,
    ) -> Result<f64> {
        let fading_seed = stream(base, purpose::FADING, 0, trial);
        let mut acc = 0.0;
        for b in 0..self.blocks {
            let sig_seed = stream(base, purpose::SIGNAL, b as u32, trial);
            let noise_seed = stream(base, purpose::NOISE, b as u32, trial);
            let x = generate_gaussian_signal(
                &self.tpl,
                self.block_len,
                self.sample_rate_hz,
                sig_seed,
            )?
            .scaled(alpha);
            let x = match fading {
                Some(profile) => apply_pedb(&x, profile, fading_seed),
                None => x,
            };
            let y = add_awgn(&x, &AwgnSpec::new(0.0), noise_seed);
            acc += self.block_statistic(&y)?;
        }
        Ok(acc / self.blocks as f64)
    }
}

fn parallel_trials<F>(workers: Option<usize>, trials: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(u32) -> Result<f64> + Sync,
{
    let run = || (0..trials as u32).into_par_iter().map(&f).collect();
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Empirical upper quantile with conservative (upward) index rounding:
/// at most a `pfa` fraction of the sample exceeds the returned value.
fn empirical_upper_quantile(mut stats: Vec<f64>, pfa: f64) -> f64 {
    stats.sort_by(f64::total_cmp);
    let n = stats.len();
    let idx = (((1.0 - pfa) * n as f64).ceil() as usize).clamp(1, n);
    stats[idx - 1]
}

fn fading_profile(cfg: &ExperimentConfig) -> Result<Option<PedBProfile>> {
    match cfg.channel {
        ChannelKind::Awgn => Ok(None),
        ChannelKind::Pedb => match &cfg.pdp_file {
            Some(path) => Ok(Some(load_pdp(path)?)),
            None => Ok(Some(PedBProfile::itu_pedestrian_b())),
        },
    }
}

fn build_metadata(cfg: &ExperimentConfig, wall_time_secs: f64, strongest_snr_db: f64) -> RunMetadata {
    let max_tpl = make_template(&cfg.template.spec_with_n(cfg.block_len()))
        .map(|t| t.max_value())
        .unwrap_or(f64::NAN);
    let strongest = 10f64.powf(strongest_snr_db / 10.0) * max_tpl;
    RunMetadata {
        config_hash: cfg.config_hash(),
        base_seed: cfg.base_seed.to_seed(),
        detector: cfg.detector.as_str().into(),
        channel: cfg.channel.as_str().into(),
        n_samples: cfg.n_samples,
        block_mode: cfg.block_mode.as_str().into(),
        blocks: cfg.block_count(),
        low_snr_convergence_ok: low_snr_convergence_ok(strongest, REFERENCE_NOISE_VAR),
        wall_time_secs,
    }
}

/// Calibrate the decision threshold: the empirical (1 - target_pfa)
/// quantile of the statistic over noise-only trials. Deterministic for a
/// given config and seed.
pub fn calibrate_threshold(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.validate()?;
    let eval = StatEvaluator::build(cfg, &cfg.template)?;
    let base = cfg.base_seed.to_seed();
    let stats = parallel_trials(cfg.workers, cfg.trials_calibration, |t| {
        eval.h0_statistic(base, purpose::CAL_NOISE, t)
    })?;
    Ok(empirical_upper_quantile(stats, cfg.target_pfa))
}

/// Measure the false-alarm rate of a threshold on a fresh set of
/// noise-only trials (streams disjoint from calibration).
pub fn measure_pfa(cfg: &ExperimentConfig, threshold: f64) -> Result<f64> {
    cfg.validate()?;
    let eval = StatEvaluator::build(cfg, &cfg.template)?;
    let base = cfg.base_seed.to_seed();
    let stats = parallel_trials(cfg.workers, cfg.trials_calibration, |t| {
        eval.h0_statistic(base, purpose::PFA_NOISE, t)
    })?;
    let false_alarms = stats
        .iter()
        .map(|&s| decide(s, threshold))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .filter(|d| d.hypothesis == Hypothesis::H1)
        .count();
    Ok(false_alarms as f64 / stats.len() as f64)
}

/// Sweep missed-detection rate over the SNR grid with a fixed threshold.
/// Rows stream to `<output_dir>/sweep.csv` as each SNR point completes;
/// a rate plot and a JSON result snapshot land next to it.
pub fn run_pmd_sweep(cfg: &ExperimentConfig, threshold: f64) -> Result<ExperimentResult> {
    cfg.validate()?;
    if !threshold.is_finite() {
        return Err(Error::InvalidInput(format!(
            "threshold must be finite, got {threshold}"
        )));
    }
    fs::create_dir_all(&cfg.output_dir)?;
    let start = Instant::now();

    let eval = StatEvaluator::build(cfg, &cfg.template)?;
    let base = cfg.base_seed.to_seed();
    let profile = fading_profile(cfg)?;
    let pfa_measured = measure_pfa(cfg, threshold)?;

    let mut csv = StreamingCsv::create(&cfg.output_dir.join("sweep.csv"))?;
    let mut rows = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr_db in &cfg.snr_grid_db {
        let alpha = snr_to_amplitude(snr_db);
        let stats = parallel_trials(cfg.workers, cfg.trials_per_snr, |t| {
            eval.h1_statistic(base, t, alpha, profile.as_ref())
        })?;
        let misses = stats
            .iter()
            .map(|&s| decide(s, threshold))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .filter(|d| d.hypothesis == Hypothesis::H0)
            .count();
        let row = SweepRow::new(snr_db, cfg.trials_per_snr, misses);
        csv.append(&row)?;
        rows.push(row);
    }

    let strongest = cfg.snr_grid_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let result = ExperimentResult {
        threshold,
        pfa_measured,
        rows,
        metadata: build_metadata(cfg, start.elapsed().as_secs_f64(), strongest),
    };

    let series = [Series {
        label: cfg.channel.as_str().into(),
        points: result.rows.iter().map(|r| (r.snr_db, r.pmd)).collect(),
    }];
    write_chart(
        &cfg.output_dir.join("sweep.svg"),
        &ChartSpec::new("Missed detection rate", "SNR (dB)", "P_md").log_y(),
        &series,
    )?;
    write_metadata(&cfg.output_dir.join("sweep_meta.json"), &result)?;
    Ok(result)
}

/// Compare the Toeplitz-covariance statistic against the
/// periodogram-correlation statistic across block lengths, together with
/// the weak norm of the covariance difference. Writes
/// `<output_dir>/equivalence.csv` and a log-log plot.
pub fn run_equivalence_experiment(cfg: &ExperimentConfig) -> Result<Vec<EquivalenceRow>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let start = Instant::now();

    let eq = &cfg.equivalence;
    let n_max = *eq.n_list.iter().max().expect("validated nonempty");
    let n_ref = eq.oversample * n_max;
    let tpl_ref = make_template(&cfg.template.spec_with_n(n_ref))?;
    let cov_ref = autocovariance_from_psd(&tpl_ref);
    let alpha = snr_to_amplitude(eq.snr_db);
    let base = cfg.base_seed.to_seed();

    let mut csv = StreamingCsv::create(&cfg.output_dir.join("equivalence.csv"))?;
    let mut rows = Vec::with_capacity(eq.n_list.len());
    for (i, &n) in eq.n_list.iter().enumerate() {
        let tpl_n = make_template(&cfg.template.spec_with_n(n))?;
        let sigma = cov_ref.truncated(n)?;
        let circ = circulant_from_psd(&tpl_n);

        let diffs = parallel_trials(cfg.workers, eq.trials, |t| {
            let x = generate_gaussian_signal(
                &tpl_n,
                n,
                cfg.sample_rate_hz,
                stream(base, purpose::EQ_SIGNAL, i as u32, t),
            )?
            .scaled(alpha);
            let y = add_awgn(
                &x,
                &AwgnSpec::new(0.0),
                stream(base, purpose::EQ_NOISE, i as u32, t),
            );
            let toeplitz = stat_lrt_low_snr(&y, &sigma)?;
            let circulant = stat_spectra_correlation(&y, &tpl_n)?;
            Ok((toeplitz - circulant).abs())
        })?;

        let row = EquivalenceRow {
            n,
            mean_abs_diff: diffs.iter().sum::<f64>() / diffs.len() as f64,
            max_abs_diff: diffs.iter().cloned().fold(0.0, f64::max),
            weak_norm: weak_norm_diff(&sigma, &circ)?,
        };
        csv.append(&row)?;
        rows.push(row);
    }

    let series = [
        Series {
            label: "mean |T_cov - T_corr|".into(),
            points: rows.iter().map(|r| (r.n as f64, r.mean_abs_diff)).collect(),
        },
        Series {
            label: "weak norm".into(),
            points: rows.iter().map(|r| (r.n as f64, r.weak_norm)).collect(),
        },
    ];
    write_chart(
        &cfg.output_dir.join("equivalence.svg"),
        &ChartSpec::new("Covariance equivalence", "block length n", "difference")
            .log_x()
            .log_y(),
        &series,
    )?;
    write_metadata(
        &cfg.output_dir.join("equivalence_meta.json"),
        &build_metadata(cfg, start.elapsed().as_secs_f64(), eq.snr_db),
    )?;
    Ok(rows)
}

/// Calibrate and measure each template kind at one SNR, next to its
/// separation objective. All kinds share seed streams, so the comparison
/// is paired. Writes `<output_dir>/features.csv`.
pub fn run_feature_ordering(cfg: &ExperimentConfig) -> Result<Vec<FeatureRow>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let start = Instant::now();

    let base = cfg.base_seed.to_seed();
    let alpha = snr_to_amplitude(cfg.features.snr_db);
    let profile = fading_profile(cfg)?;

    let mut csv = StreamingCsv::create(&cfg.output_dir.join("features.csv"))?;
    let mut rows = Vec::with_capacity(cfg.features.kinds.len());
    for &kind in &cfg.features.kinds {
        let eval = StatEvaluator::build(cfg, &cfg.template.with_kind(kind))?;
        let h0 = parallel_trials(cfg.workers, cfg.trials_calibration, |t| {
            eval.h0_statistic(base, purpose::CAL_NOISE, t)
        })?;
        let threshold = empirical_upper_quantile(h0, cfg.target_pfa);

        let stats = parallel_trials(cfg.workers, cfg.trials_per_snr, |t| {
            eval.h1_statistic(base, t, alpha, profile.as_ref())
        })?;
        let misses = stats
            .iter()
            .map(|&s| decide(s, threshold))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .filter(|d| d.hypothesis == Hypothesis::H0)
            .count();

        let sep = separation(eval.template(), REFERENCE_NOISE_VAR)?;
        let row = FeatureRow {
            label: eval.template().label().to_string(),
            objective: sep.objective,
            gap: sep.gap,
            threshold,
            pmd: misses as f64 / cfg.trials_per_snr as f64,
        };
        csv.append(&row)?;
        rows.push(row);
    }

    write_metadata(
        &cfg.output_dir.join("features_meta.json"),
        &build_metadata(cfg, start.elapsed().as_secs_f64(), cfg.features.snr_db),
    )?;
    Ok(rows)
}
