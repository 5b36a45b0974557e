//! Result rows, rate confidence intervals, and the writers that put them
//! on disk.
//!
//! CSV output is byte-deterministic for a given config and seed: rows
//! carry only computed values, while anything environmental (wall time)
//! lives in the JSON metadata sidecar.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::synthesis::RngSeed;

/// Two-sided 95% Wilson score interval for a binomial rate; behaves
/// sensibly all the way down to zero observed events.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64; // 97.5% normal quantile
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One SNR point of a missed-detection sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub trials: usize,
    pub misses: usize,
    pub pmd: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl SweepRow {
    pub fn new(snr_db: f64, trials: usize, misses: usize) -> Self {
        let (wilson_lo, wilson_hi) = wilson_interval(misses, trials);
        Self {
            snr_db,
            trials,
            misses,
            pmd: misses as f64 / trials as f64,
            wilson_lo,
            wilson_hi,
        }
    }
}

/// One block length of the covariance-equivalence experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub n: usize,
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
    pub weak_norm: f64,
}

/// One template of the ordering experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub label: String,
    pub objective: f64,
    pub gap: f64,
    pub threshold: f64,
    pub pmd: f64,
}

/// Full outcome of a calibrated sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub threshold: f64,
    /// False-alarm rate measured on a fresh H0 run with the calibrated
    /// threshold.
    pub pfa_measured: f64,
    pub rows: Vec<SweepRow>,
    pub metadata: RunMetadata,
}

/// Environment and provenance of a run; the only place wall time may
/// appear.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub base_seed: RngSeed,
    pub detector: String,
    pub channel: String,
    pub n_samples: usize,
    pub block_mode: String,
    pub blocks: usize,
    /// Whether the low-SNR series expansion is trustworthy at the
    /// strongest configured signal level.
    pub low_snr_convergence_ok: bool,
    pub wall_time_secs: f64,
}

/// Incremental CSV writer: each appended row is flushed so partial
/// results survive a later failure.
pub struct StreamingCsv {
    writer: csv::Writer<File>,
}

impl StreamingCsv {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        Ok(Self {
            writer: csv::Writer::from_writer(file),
        })
    }

    pub fn append<R: Serialize>(&mut self, row: &R) -> Result<()> {
        self.writer
            .serialize(row)
            .map_err(|e| crate::error::Error::Io(std::io::Error::other(e)))?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Write run metadata as pretty JSON next to the CSV outputs.
pub fn write_metadata<T: Serialize>(path: &Path, meta: &T) -> Result<()> {
    let mut file = File::create(path)?;
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| crate::error::Error::Io(std::io::Error::other(e)))?;
    file.write_all(json.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}
