use super::AnalysisError;
use crate::waveform::Waveform;

pub const MIN_BASELINE_POINTS: usize = 20;

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

fn masked<'a>(
    values: &'a [f64],
    mask: &'a [bool],
) -> Result<impl Iterator<Item = (usize, f64)> + 'a, AnalysisError> {
    if values.len() != mask.len() {
        return Err(AnalysisError::InvalidParameter(
            "mask length differs from record length".into(),
        ));
    }
    let got = mask.iter().filter(|&&m| m).count();
    if got < MIN_BASELINE_POINTS {
        return Err(AnalysisError::TooFewPoints {
            needed: MIN_BASELINE_POINTS,
            got,
        });
    }
    Ok(values
        .iter()
        .zip(mask)
        .enumerate()
        .filter(|(_, (_, &m))| m)
        .map(|(i, (&v, _))| (i, v)))
}

/// RMS of `values` over the quiet region selected by `mask`.
pub fn baseline_noise_rms(values: &[f64], mask: &[bool]) -> Result<f64, AnalysisError> {
    let v: Vec<f64> = masked(values, mask)?.map(|(_, v)| v).collect();
    Ok(rms(&v))
}

/// RMS of `values - reference` over `mask`.
pub fn residual_noise_rms(
    values: &[f64],
    reference: &[f64],
    mask: &[bool],
) -> Result<f64, AnalysisError> {
    if reference.len() != values.len() {
        return Err(AnalysisError::InvalidParameter(
            "reference length differs from record length".into(),
        ));
    }
    let v: Vec<f64> = masked(values, mask)?
        .map(|(i, v)| v - reference[i])
        .collect();
    Ok(rms(&v))
}

/// Marks times whose neighbourhood `[t - half_width, t + half_width]` has
/// `|w| <= threshold` everywhere, checked every `step` seconds.
pub fn quiet_mask(
    times: &[f64],
    w: &Waveform,
    half_width: f64,
    threshold: f64,
    step: f64,
) -> Result<Vec<bool>, AnalysisError> {
    if !(step > 0.0) {
        return Err(AnalysisError::InvalidParameter("step must be positive".into()));
    }
    let n = (2.0 * half_width / step).ceil().max(1.0) as usize;
    times
        .iter()
        .map(|&t| {
            for i in 0..=n {
                let tau = t - half_width + 2.0 * half_width * i as f64 / n as f64;
                let v = w.eval(tau).map_err(|e| AnalysisError::InvalidParameter(e.to_string()))?;
                if v.abs() > threshold {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect()
}
