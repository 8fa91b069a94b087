use super::{SampledWaveform, Waveform, WaveformError};

/// Time constant of a first-order low-pass whose step response rises from
/// 10 % to 90 % in `rise_10_90` seconds.
pub fn lowpass_time_constant(rise_10_90: f64) -> f64 {
    rise_10_90 / 9f64.ln()
}

// Grid points per time constant.
const POINTS_PER_TAU: f64 = 100.0;

/// First-order (RC) low-pass of `w` over `[0, span]`.
///
/// The input is sampled on a uniform grid and treated as piecewise linear;
/// each grid interval is propagated with the exact exponential response for
/// a linear input, so the only discretisation error is that of the input
/// sampling. The input is taken as zero before `t = 0`.
pub fn apply_circuit_lowpass(
    w: &Waveform,
    rise_10_90: f64,
    span: f64,
) -> Result<Waveform, WaveformError> {
    if !(rise_10_90 > 0.0 && rise_10_90.is_finite()) {
        return Err(WaveformError::InvalidParameter(format!(
            "low-pass rise time must be positive, got {rise_10_90}"
        )));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(WaveformError::InvalidParameter(format!(
            "low-pass span must be positive, got {span}"
        )));
    }
    let tau = lowpass_time_constant(rise_10_90);
    let n = ((span / tau) * POINTS_PER_TAU).ceil().max(2.0) as usize;
    let dt = span / n as f64;
    let a = (-dt / tau).exp();
    // Weight of the input slope over one interval.
    let slope_gain = dt - tau * (1.0 - a);

    let mut x = Vec::with_capacity(n + 1);
    for i in 0..=n {
        x.push(w.eval(i as f64 * dt)?);
    }
    // The filter starts discharged; a value present at t = 0 acts as a step
    // applied at t = 0.
    let mut y = Vec::with_capacity(n + 1);
    y.push(0.0);
    let mut state = 0.0;
    for pair in x.windows(2) {
        let m = (pair[1] - pair[0]) / dt;
        state = a * state + pair[0] * (1.0 - a) + m * slope_gain;
        y.push(state);
    }
    Ok(Waveform::Samples(SampledWaveform::new(dt, y)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crossing(w: &Waveform, level: f64, span: f64) -> f64 {
        let n = 200_000;
        let mut prev = w.eval(0.0).unwrap();
        for i in 1..=n {
            let t = span * i as f64 / n as f64;
            let v = w.eval(t).unwrap();
            if prev < level && v >= level {
                let t0 = span * (i - 1) as f64 / n as f64;
                return t0 + (level - prev) / (v - prev) * (t - t0);
            }
            prev = v;
        }
        panic!("no crossing of {level}");
    }

    #[test]
    fn unit_step_rise_time_matches_setting() {
        let rise = 8e-9;
        let tau = lowpass_time_constant(rise);
        let out = apply_circuit_lowpass(
            &Waveform::Step {
                amplitude: 1.0,
                start: 0.0,
            },
            rise,
            100e-9,
        )
        .unwrap();
        let t10 = crossing(&out, 0.1, 100e-9);
        let t90 = crossing(&out, 0.9, 100e-9);
        assert!((t10 - tau * (10.0f64 / 9.0).ln()).abs() < 1e-12, "t10 {t10}");
        assert!((t90 - tau * 10f64.ln()).abs() < 1e-12, "t90 {t90}");
        assert!(((t90 - t10) - rise).abs() < 1e-12);
    }

    #[test]
    fn dc_gain_is_one() {
        let out = apply_circuit_lowpass(&Waveform::constant(2.5e-6), 8e-9, 200e-9).unwrap();
        // Well after the start-up transient.
        for i in 100..200 {
            let v = out.eval(i as f64 * 1e-9).unwrap();
            assert!((v / 2.5e-6 - 1.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn sine_at_corner_frequency_loses_three_db() {
        let rise = 8e-9;
        let tau = lowpass_time_constant(rise);
        let f = 1.0 / (2.0 * std::f64::consts::PI * tau);
        let span = 40.0 / f;
        let out = apply_circuit_lowpass(
            &Waveform::Sine {
                amplitude: 1.0,
                frequency: f,
            },
            rise,
            span,
        )
        .unwrap();
        // Peak over the last few periods, after the transient has decayed.
        let mut peak: f64 = 0.0;
        let n = 20_000;
        for i in 0..n {
            let t = span * (0.8 + 0.2 * i as f64 / n as f64);
            peak = peak.max(out.eval(t).unwrap().abs());
        }
        assert!((peak - 0.5f64.sqrt()).abs() < 1e-4, "peak {peak}");
    }

    #[test]
    fn rejects_non_positive_rise_time() {
        assert!(apply_circuit_lowpass(&Waveform::zero(), 0.0, 1e-6).is_err());
        assert!(apply_circuit_lowpass(&Waveform::zero(), -1e-9, 1e-6).is_err());
    }
}
