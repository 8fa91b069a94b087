use serde::Serialize;

use super::AnalysisError;
use crate::acquisition::{run_sweep, SweepConfig};
use crate::sensor::SensorParams;
use crate::sim::{contrast_factor, Backend, SimSettings};
use crate::waveform::TriggeredSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakSignal {
    pub k: u32,
    /// Largest `|p - 1/2|` over the sweep.
    pub dp_max: f64,
    /// `asin(2 dp_max / contrast)`, with the coherence decay divided out.
    pub dphi_max_corrected: f64,
}

/// Peak signal of a differential sweep for each `k`.
pub fn peak_signal_vs_k(
    base: &SweepConfig,
    sig: &TriggeredSignal,
    p: &SensorParams,
    backend: Backend,
    settings: &SimSettings,
    k_values: &[u32],
) -> Result<Vec<PeakSignal>, AnalysisError> {
    let mut out = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let cfg = SweepConfig { k, ..*base };
        let rec = run_sweep(&cfg, sig, p, backend, settings)?;
        let dp_max = rec
            .points
            .iter()
            .map(|pt| (pt.p_mean - 0.5).abs())
            .fold(0.0, f64::max);
        let span = 2.0 * k as f64 * sig.trep();
        let decay = contrast_factor(span, p);
        out.push(PeakSignal {
            k,
            dp_max,
            dphi_max_corrected: (2.0 * dp_max / decay).min(1.0).asin(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginFit {
    pub slope: f64,
    /// Coefficient of determination about the mean of `y`.
    pub r2: f64,
}

/// Least-squares line `y = slope * x`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> OriginFit {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let slope = sxy / sxx;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    OriginFit {
        slope,
        r2: 1.0 - ss_res / ss_tot,
    }
}
