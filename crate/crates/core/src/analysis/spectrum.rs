use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{record_values, uniform_step, AnalysisError, TransferFunction};
use crate::acquisition::SweepResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumWindow {
    #[default]
    None,
    Hann,
}

/// One-sided power spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSpectrum {
    pub freqs: Vec<f64>,
    /// Folded so that the sum equals the mean square of the (windowed)
    /// record.
    pub power: Vec<f64>,
    /// `power` divided by its maximum; all zeros for a zero record.
    pub normalized: Vec<f64>,
}

impl PowerSpectrum {
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Index of the bin nearest `f`.
    pub fn bin(&self, f: f64) -> usize {
        let df = if self.freqs.len() > 1 { self.freqs[1] } else { 1.0 };
        ((f / df).round() as usize).min(self.freqs.len().saturating_sub(1))
    }
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

/// Power spectrum of uniformly sampled `values` with step `dt`.
pub fn power_spectrum(
    values: &[f64],
    dt: f64,
    window: SpectrumWindow,
) -> Result<PowerSpectrum, AnalysisError> {
    let n = values.len();
    if n < 2 {
        return Err(AnalysisError::TooFewPoints { needed: 2, got: n });
    }
    if !(dt > 0.0) {
        return Err(AnalysisError::NonUniformGrid);
    }
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = match window {
                SpectrumWindow::None => 1.0,
                SpectrumWindow::Hann => (PI * i as f64 / n as f64).sin().powi(2),
            };
            Complex64::new(v * w, 0.0)
        })
        .collect();
    fft(&mut buf, false);
    let nf = n as f64;
    let half = n / 2;
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().enumerate().take(half + 1) {
        let p = c.norm_sqr() / (nf * nf);
        let folded = k != 0 && !(n % 2 == 0 && k == half);
        power.push(if folded { 2.0 * p } else { p });
    }
    let freqs = (0..=half).map(|k| k as f64 / (nf * dt)).collect();
    let max = power.iter().cloned().fold(0.0, f64::max);
    let normalized = if max > 0.0 {
        power.iter().map(|p| p / max).collect()
    } else {
        vec![0.0; power.len()]
    };
    Ok(PowerSpectrum {
        freqs,
        power,
        normalized,
    })
}

/// Power spectrum of a sweep record's signal column.
pub fn power_spectrum_of(
    rec: &SweepResult,
    window: SpectrumWindow,
) -> Result<PowerSpectrum, AnalysisError> {
    let dt = uniform_step(&rec.times())?;
    power_spectrum(&record_values(rec), dt, window)
}

/// Regularised deconvolution `G / (G^2 + lambda)` of a periodic record.
///
/// `G` is taken as real (zero-phase about the window centre), so the record
/// must be timestamped at the window centroid.
pub fn inverse_filter(
    values: &[f64],
    dt: f64,
    tf: &TransferFunction,
    lambda: f64,
) -> Result<Vec<f64>, AnalysisError> {
    if !(lambda > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "regularisation must be > 0, got {lambda}"
        )));
    }
    let n = values.len();
    if n < 2 {
        return Err(AnalysisError::TooFewPoints { needed: 2, got: n });
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf, false);
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let g = tf.response_at(kk / (n as f64 * dt));
        *c *= g / (g * g + lambda);
    }
    fft(&mut buf, true);
    Ok(buf.iter().map(|c| c.re / n as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_has_single_peak() {
        let dt = 4e-9;
        let n = 1024;
        // 4 MHz is not a bin centre for 1024 x 4 ns; the peak is the nearest bin.
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 4e6 * i as f64 * dt).sin())
            .collect();
        let s = power_spectrum(&x, dt, SpectrumWindow::Hann).unwrap();
        let (imax, _) = s
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(imax, s.bin(4e6));
        assert!((s.freqs[imax] - 4e6).abs() < s.freqs[1]);
    }

    #[test]
    fn parseval() {
        for n in [7usize, 64, 250] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
            let s = power_spectrum(&x, 1.0, SpectrumWindow::None).unwrap();
            let ms = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!((s.total() / ms - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_record_gives_zeros() {
        let s = power_spectrum(&[0.0; 16], 1.0, SpectrumWindow::Hann).unwrap();
        assert!(s.normalized.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inverse_filter_limits() {
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let freqs: Vec<f64> = (0..=200).map(|i| i as f64 * 1e6).collect();
        let id = TransferFunction::identity(freqs);
        let y = inverse_filter(&x, 4e-9, &id, 1e-12).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
        let z = inverse_filter(&x, 4e-9, &id, 1e12).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-10));
        assert!(inverse_filter(&x, 4e-9, &id, 0.0).is_err());
        assert!(inverse_filter(&x, 4e-9, &id, -1.0).is_err());
    }
}
