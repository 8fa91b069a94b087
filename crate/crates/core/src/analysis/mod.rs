//! Derived quantities: step response, transfer function, sensitivity,
//! spectra and noise statistics.

mod noise;
mod peak;
mod sensitivity;
mod spectrum;
mod step;
mod transfer;

use thiserror::Error;

use crate::acquisition::AcqError;
use crate::sequence::SequenceError;
use crate::sim::SimError;

pub use noise::{baseline_noise_rms, quiet_mask, residual_noise_rms, rms, MIN_BASELINE_POINTS};
pub use peak::{fit_through_origin, peak_signal_vs_k, OriginFit, PeakSignal};
pub use sensitivity::{
    bmin, bmin_curve, loglog_slope, SensitivityCurve, SENSITIVITY_CSV_HEADER,
};
pub use spectrum::{
    inverse_filter, power_spectrum, power_spectrum_of, PowerSpectrum, SpectrumWindow,
};
pub use step::{hann_cdf_rise_fraction, rise_time_10_90, rise_time_10_90_samples, RiseTime};
pub use transfer::{
    hann_magnitude, hann_response, hann_minus_3db, transfer_function, ImpulseSettings,
    TfMethod, TransferFunction, BODE_CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("time grid is not uniform")]
    NonUniformGrid,
    #[error("edge is not monotone: {0}")]
    NotMonotone(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Acquisition(#[from] AcqError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// Signal column of a record: field estimates when present, else
/// populations.
pub(crate) fn record_values(rec: &crate::acquisition::SweepResult) -> Vec<f64> {
    if rec.points.iter().all(|p| p.b_est.is_some()) {
        rec.b_est()
    } else {
        rec.p_mean()
    }
}

/// Uniform sample step of `t`, or an error.
pub(crate) fn uniform_step(t: &[f64]) -> Result<f64, AnalysisError> {
    if t.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            needed: 2,
            got: t.len(),
        });
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(AnalysisError::NonUniformGrid);
    }
    for w in t.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(AnalysisError::NonUniformGrid);
        }
    }
    Ok(dt)
}
