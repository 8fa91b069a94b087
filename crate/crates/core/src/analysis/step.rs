use std::f64::consts::PI;

use serde::Serialize;

use super::{record_values, AnalysisError};
use crate::acquisition::SweepResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiseTime {
    pub measured: f64,
    /// `max(tpi, tint)`.
    pub model: f64,
    pub t10: f64,
    pub t90: f64,
}

// Points averaged at each end to estimate the step levels.
const LEVEL_POINTS: usize = 3;
// Allowed dip against the edge direction, as a fraction of the step.
const MONOTONE_SLACK: f64 = 0.1;

fn crossing(t: &[f64], y: &[f64], level: f64, from: usize) -> Option<(usize, f64)> {
    (from.max(1)..y.len()).find_map(|i| {
        (y[i - 1] < level && y[i] >= level).then(|| {
            let f = (level - y[i - 1]) / (y[i] - y[i - 1]);
            (i, t[i - 1] + f * (t[i] - t[i - 1]))
        })
    })
}

/// 10-90 % rise time of a single edge sampled at `t`.
///
/// The low and high levels are the means of the first and last three
/// samples; a falling edge is handled by flipping the sign.
pub fn rise_time_10_90_samples(t: &[f64], y: &[f64]) -> Result<(f64, f64, f64), AnalysisError> {
    if t.len() != y.len() {
        return Err(AnalysisError::InvalidParameter(
            "time and value arrays differ in length".into(),
        ));
    }
    if y.len() < 10 {
        return Err(AnalysisError::TooFewPoints {
            needed: 10,
            got: y.len(),
        });
    }
    let lo = y[..LEVEL_POINTS].iter().sum::<f64>() / LEVEL_POINTS as f64;
    let hi = y[y.len() - LEVEL_POINTS..].iter().sum::<f64>() / LEVEL_POINTS as f64;
    let amp = hi - lo;
    if !(amp.abs() > 0.0) {
        return Err(AnalysisError::NotMonotone("record has no step".into()));
    }
    let norm: Vec<f64> = y.iter().map(|v| (v - lo) / amp).collect();
    let (i10, t10) = crossing(t, &norm, 0.1, 1)
        .ok_or_else(|| AnalysisError::NotMonotone("no 10 % crossing".into()))?;
    let (i90, t90) = crossing(t, &norm, 0.9, i10)
        .ok_or_else(|| AnalysisError::NotMonotone("no 90 % crossing".into()))?;
    let mut peak = f64::NEG_INFINITY;
    for (i, v) in norm.iter().enumerate().take(i90 + 1).skip(i10.saturating_sub(1)) {
        if *v < peak - MONOTONE_SLACK {
            return Err(AnalysisError::NotMonotone(format!(
                "record falls by {:.3} of the step at t = {:e}",
                peak - v,
                t[i]
            )));
        }
        peak = peak.max(*v);
    }
    Ok((t90 - t10, t10, t90))
}

/// Rise time of a step-response sweep, with the `max(tpi, tint)` model.
pub fn rise_time_10_90(rec: &SweepResult, tpi: f64, tint: f64) -> Result<RiseTime, AnalysisError> {
    let (measured, t10, t90) = rise_time_10_90_samples(&rec.times(), &record_values(rec))?;
    Ok(RiseTime {
        measured,
        model: tpi.max(tint),
        t10,
        t90,
    })
}

/// 10-90 % width of the cumulative Hann window, as a fraction of the
/// window length.
pub fn hann_cdf_rise_fraction() -> f64 {
    // CDF of sin^2(pi x) on [0, 1] is x - sin(2 pi x) / (2 pi).
    let cdf = |x: f64| x - (2.0 * PI * x).sin() / (2.0 * PI);
    let solve = |level: f64| {
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if cdf(m) < level {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    solve(0.9) - solve(0.1)
}
