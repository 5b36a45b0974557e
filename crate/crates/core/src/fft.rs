//! Thin wrappers around `rustfft` with a process-wide plan cache.
//!
//! Conventions: `forward` computes the unnormalized DFT
//! `X[k] = sum_l x[l] exp(-j 2 pi k l / n)` and `inverse` its unnormalized
//! adjoint; callers apply whatever scaling their identity needs.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::{Mutex, OnceLock};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// In-place unnormalized forward DFT.
pub fn forward(data: &mut [Complex64]) {
    let fft = planner().lock().unwrap().plan_fft_forward(data.len());
    fft.process(data);
}

/// In-place unnormalized inverse DFT (no 1/n factor).
pub fn inverse(data: &mut [Complex64]) {
    let fft = planner().lock().unwrap().plan_fft_inverse(data.len());
    fft.process(data);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_scales_by_n() {
        let orig: Vec<Complex64> = (0..8)
            .map(|i| Complex64::new(i as f64, -(i as f64) / 3.0))
            .collect();
        let mut data = orig.clone();
        forward(&mut data);
        inverse(&mut data);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert!((a / 8.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_of_impulse_is_flat() {
        let mut data = vec![Complex64::new(0.0, 0.0); 16];
        data[0] = Complex64::new(1.0, 0.0);
        forward(&mut data);
        for v in &data {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
