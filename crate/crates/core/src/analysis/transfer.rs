use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::sensor::SensorParams;
use crate::sequence::build_differential_echo;
use crate::sim::{evaluate_ideal, Backend, SimSettings};
use crate::waveform::{TriggeredSignal, Waveform};

pub const BODE_CSV_HEADER: &str = "f_hz,mag,mag_db,model_mag";

/// Fourier transform of a Hann window of total length `length`, normalised
/// to 1 at DC. Changes sign beyond the second zero.
pub fn hann_response(f: f64, length: f64) -> f64 {
    let x = f * length;
    if x == 0.0 {
        return 1.0;
    }
    if (x.abs() - 1.0).abs() < 1e-9 {
        return 0.5;
    }
    (PI * x).sin() / (PI * x * (1.0 - x * x))
}

pub fn hann_magnitude(f: f64, length: f64) -> f64 {
    hann_response(f, length).abs()
}

/// Frequency where the Hann response drops to `1/sqrt 2`.
pub fn hann_minus_3db(length: f64) -> f64 {
    let target = 0.5f64.sqrt();
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if hann_response(m, 1.0) > target {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b) / length
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfMethod {
    AnalyticHann,
    SimImpulse,
}

/// Settings for the simulated impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulseSettings {
    /// Full width at half maximum of the injected Gaussian.
    pub fwhm: f64,
    /// Delay step of the sweep across the impulse.
    pub step: f64,
    pub backend: Backend,
    pub trep: f64,
}

impl Default for ImpulseSettings {
    fn default() -> Self {
        Self {
            fwhm: 2e-9,
            step: 0.25e-9,
            backend: Backend::Filter,
            trep: 344e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferFunction {
    pub freqs: Vec<f64>,
    /// Normalised to 1 at DC.
    pub magnitude: Vec<f64>,
    /// Analytic Hann magnitude of length `tint + tpi`.
    pub model_reference: Vec<f64>,
    /// Signed real response when the filter is known to be zero-phase.
    pub real_response: Option<Vec<f64>>,
    pub method: TfMethod,
    pub window_length: f64,
}

impl TransferFunction {
    /// Flat response, mostly useful for tests.
    pub fn identity(freqs: Vec<f64>) -> Self {
        let ones = vec![1.0; freqs.len()];
        Self {
            magnitude: ones.clone(),
            model_reference: ones.clone(),
            real_response: Some(ones),
            freqs,
            method: TfMethod::AnalyticHann,
            window_length: 0.0,
        }
    }

    /// First `1/sqrt 2` crossing, linearly interpolated.
    pub fn minus_3db(&self) -> Option<f64> {
        crossing(&self.freqs, &self.magnitude)
    }

    pub fn model_minus_3db(&self) -> Option<f64> {
        crossing(&self.freqs, &self.model_reference)
    }

    /// Response at `f`, interpolated on the grid and zero beyond it.
    pub fn response_at(&self, f: f64) -> f64 {
        let f = f.abs();
        let ys = self.real_response.as_ref().unwrap_or(&self.magnitude);
        let n = self.freqs.len();
        if n == 0 || f > self.freqs[n - 1] {
            return 0.0;
        }
        let i = self.freqs.partition_point(|&x| x <= f);
        if i == 0 {
            return ys[0];
        }
        if i >= n {
            return ys[n - 1];
        }
        let (f0, f1) = (self.freqs[i - 1], self.freqs[i]);
        ys[i - 1] + (ys[i] - ys[i - 1]) * (f - f0) / (f1 - f0)
    }

    pub fn to_bode_csv(&self) -> String {
        let mut out = String::from(BODE_CSV_HEADER);
        out.push('\n');
        for ((f, m), r) in self
            .freqs
            .iter()
            .zip(&self.magnitude)
            .zip(&self.model_reference)
        {
            out.push_str(&format!("{f:e},{m:e},{:e},{r:e}\n", 20.0 * m.log10()));
        }
        out
    }
}

fn crossing(freqs: &[f64], mag: &[f64]) -> Option<f64> {
    let target = 0.5f64.sqrt();
    (1..mag.len()).find_map(|i| {
        (mag[i - 1] >= target && mag[i] < target).then(|| {
            let u = (mag[i - 1] - target) / (mag[i - 1] - mag[i]);
            freqs[i - 1] + u * (freqs[i] - freqs[i - 1])
        })
    })
}

/// Sensor transfer function of the differential protocol for `k = 1`.
///
/// The simulated mode sweeps the delay across a narrow Gaussian field
/// impulse; the swept phase is the sensitivity window convolved with the
/// Gaussian, so its spectrum is divided by the Gaussian's before
/// normalising to DC.
pub fn transfer_function(
    freqs: &[f64],
    tint: f64,
    p: &SensorParams,
    method: TfMethod,
    impulse: &ImpulseSettings,
    settings: &SimSettings,
) -> Result<TransferFunction, AnalysisError> {
    if !(tint > 0.0) {
        return Err(AnalysisError::InvalidParameter(
            "tint must be positive".into(),
        ));
    }
    let length = tint + p.tpi();
    let model: Vec<f64> = freqs.iter().map(|&f| hann_magnitude(f, length)).collect();
    match method {
        TfMethod::AnalyticHann => Ok(TransferFunction {
            freqs: freqs.to_vec(),
            magnitude: model.clone(),
            model_reference: model,
            real_response: Some(freqs.iter().map(|&f| hann_response(f, length)).collect()),
            method,
            window_length: length,
        }),
        TfMethod::SimImpulse => {
            let (times, response) = impulse_response(tint, p, impulse, settings)?;
            let sigma = impulse.fwhm / (8.0 * 2f64.ln()).sqrt();
            let dft = |f: f64| -> f64 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, r) in times.iter().zip(&response) {
                    acc += Complex64::from_polar(*r, -2.0 * PI * f * t);
                }
                let gauss = (-0.5 * (2.0 * PI * f * sigma).powi(2)).exp();
                acc.norm() / gauss
            };
            let dc = dft(0.0);
            if !(dc.abs() > 0.0) {
                return Err(AnalysisError::InvalidParameter(
                    "impulse response has zero area".into(),
                ));
            }
            let magnitude = freqs.par_iter().map(|&f| dft(f) / dc).collect();
            Ok(TransferFunction {
                freqs: freqs.to_vec(),
                magnitude,
                model_reference: model,
                real_response: None,
                method,
                window_length: length,
            })
        }
    }
}

/// Swept phase for a Gaussian impulse, as a function of the offset of the
/// impulse from the sample delay.
fn impulse_response(
    tint: f64,
    p: &SensorParams,
    imp: &ImpulseSettings,
    settings: &SimSettings,
) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    if !(imp.fwhm > 0.0 && imp.fwhm < tint / 4.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "impulse width {:e} s must be below tint/4 = {:e} s",
            imp.fwhm,
            tint / 4.0
        )));
    }
    if !(imp.step > 0.0) {
        return Err(AnalysisError::InvalidParameter("impulse step must be positive".into()));
    }
    let length = tint + p.tpi();
    let margin = 5.0 * imp.fwhm;
    let center = length + 2.0 * margin;
    if center + margin > imp.trep {
        return Err(AnalysisError::InvalidParameter(
            "repetition time too short for the impulse sweep".into(),
        ));
    }
    let sig = TriggeredSignal::new(
        Waveform::Gaussian {
            amplitude: 1e-6,
            center,
            fwhm: imp.fwhm,
        },
        imp.trep,
    )
    .map_err(|e| AnalysisError::InvalidParameter(e.to_string()))?
    .with_passages(2);
    let settings = SimSettings {
        quad_step: settings.quad_step.min(imp.fwhm / 20.0),
        ..*settings
    };
    // Offsets s = center - t covering the window plus margins.
    let n = ((length + 2.0 * margin) / imp.step).ceil() as usize + 1;
    let offsets: Vec<f64> = (0..n).map(|i| -margin + i as f64 * imp.step).collect();
    let response = offsets
        .par_iter()
        .map(|&s| {
            let t = center - s;
            let seq = build_differential_echo(t, tint, 1, imp.trep, p)?;
            let (_, phase) = evaluate_ideal(&seq, &sig, p, imp.backend, &settings)?;
            Ok(phase)
        })
        .collect::<Result<Vec<f64>, AnalysisError>>()?;
    Ok((offsets, response))
}
