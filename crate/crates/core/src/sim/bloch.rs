use num_complex::Complex64;

use super::SimError;
use crate::sensor::{SensorParams, SensorState};
use crate::sequence::PulseSequence;
use crate::waveform::TriggeredSignal;

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochReport {
    /// Upper-level population after the final pulse.
    pub p_ideal: f64,
    /// Signal phase, sign-aligned with the filter path.
    pub phase: f64,
    /// Azimuth of the Bloch vector just before the final pulse.
    pub raw_phase: f64,
    pub max_norm_drift: f64,
    pub steps: usize,
}

/// `exp(-i h (wx sx + wy sy + wz sz) / 2)`.
fn propagator(wx: f64, wy: f64, wz: f64, h: f64) -> [[Complex64; 2]; 2] {
    let w = (wx * wx + wy * wy + wz * wz).sqrt();
    if w == 0.0 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        return [[one, zero], [zero, one]];
    }
    let half = 0.5 * w * h;
    let (s, c) = half.sin_cos();
    let (nx, ny, nz) = (wx / w, wy / w, wz / w);
    [
        [Complex64::new(c, -s * nz), Complex64::new(-s * ny, -s * nx)],
        [Complex64::new(s * ny, -s * nx), Complex64::new(c, s * nz)],
    ]
}

/// Step the two-level state through `seq` with the field of `sig`.
///
/// The field is taken at the midpoint of each step; step boundaries are
/// aligned with pulse edges and signal breakpoints, and no step exceeds
/// `dt`, which must not exceed tpi/50.
pub fn bloch_evolve(
    seq: &PulseSequence,
    sig: &TriggeredSignal,
    p: &SensorParams,
    dt: f64,
) -> Result<BlochReport, SimError> {
    let limit = p.tpi() / 50.0;
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-9)) {
        return Err(SimError::StepTooLarge { dt, limit });
    }
    let n = seq.pulses.len();
    if n == 0 {
        return Ok(BlochReport {
            p_ideal: 0.0,
            phase: 0.0,
            raw_phase: 0.0,
            max_norm_drift: 0.0,
            steps: 0,
        });
    }
    let t0 = seq.pulses[0].start;
    let t1 = seq.pulses[n - 1].end();

    let mut edges: Vec<f64> = seq
        .pulses
        .iter()
        .flat_map(|pl| [pl.start, pl.end()])
        .collect();
    edges.extend(sig.breakpoints(t0, t1));
    edges.retain(|&e| e >= t0 && e <= t1);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-18);

    let last_start = seq.pulses[n - 1].start;
    let mut state = SensorState::ground();
    let mut drift: f64 = 0.0;
    let mut steps = 0;
    let mut before_last: Option<[f64; 3]> = None;
    let mut pulse_idx = 0;

    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        if before_last.is_none() && a >= last_start - 1e-18 {
            before_last = Some(state.bloch_vector());
        }
        let mid = 0.5 * (a + b);
        while pulse_idx < n && seq.pulses[pulse_idx].end() <= mid {
            pulse_idx += 1;
        }
        let drive = seq
            .pulses
            .get(pulse_idx)
            .filter(|pl| pl.start <= mid)
            .map(|pl| {
                let rate = pl.angle / pl.duration;
                (rate * pl.phase.cos(), rate * pl.phase.sin())
            })
            .unwrap_or((0.0, 0.0));

        let m = ((b - a) / dt).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        for i in 0..m {
            let tm = a + (i as f64 + 0.5) * h;
            let field = sig.field(tm)?;
            if !field.is_finite() {
                return Err(SimError::NonFinite { t: tm, value: field });
            }
            let u = propagator(drive.0, drive.1, p.gamma * field, h);
            state.apply(&u);
            steps += 1;
            let d = (state.norm_sqr() - 1.0).abs();
            drift = drift.max(d);
            if d > NORM_TOLERANCE {
                return Err(SimError::NormDrift { t: tm, drift: d });
            }
        }
    }

    let v = before_last.unwrap_or_else(|| state.bloch_vector());
    let raw_phase = v[0].atan2(-v[1]);
    Ok(BlochReport {
        p_ideal: state.excited_population(),
        phase: seq.signal_sign() * raw_phase,
        raw_phase,
        max_norm_drift: drift,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{build_differential_echo, build_small_interval_ramsey};
    use crate::waveform::Waveform;

    #[test]
    fn propagator_is_unitary() {
        let u = propagator(1.3, -0.4, 2.2, 0.7);
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let col = u[0][0].norm_sqr() + u[1][0].norm_sqr();
        assert!((col - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_pi_about_x_points_along_minus_y() {
        let mut s = SensorState::ground();
        s.apply(&propagator(1.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let v = s.bloch_vector();
        assert!(v[0].abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn zero_field_ramsey_reads_one_half() {
        let p = SensorParams::default();
        let seq = build_small_interval_ramsey(0.0, 50e-9, &p).unwrap();
        let sig = TriggeredSignal::new(Waveform::zero(), 1e-6).unwrap();
        let r = bloch_evolve(&seq, &sig, &p, p.tpi() / 50.0).unwrap();
        assert!((r.p_ideal - 0.5).abs() < 1e-12, "{}", r.p_ideal);
        assert!(r.phase.abs() < 1e-12);
        assert!(r.max_norm_drift < 1e-12);
    }

    #[test]
    fn rejects_coarse_steps() {
        let p = SensorParams::default();
        let seq = build_small_interval_ramsey(0.0, 50e-9, &p).unwrap();
        let sig = TriggeredSignal::new(Waveform::zero(), 1e-6).unwrap();
        assert!(matches!(
            bloch_evolve(&seq, &sig, &p, p.tpi() / 10.0),
            Err(SimError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn differential_constant_field_matches_kernel_integral() {
        let p = SensorParams::default();
        let trep = 344e-9;
        let k = 2;
        let seq = build_differential_echo(40e-9, 20e-9, k, trep, &p).unwrap();
        let b = 5e-6;
        let sig = TriggeredSignal::new(Waveform::constant(b), trep)
            .unwrap()
            .with_passages(2 * k);
        let r = bloch_evolve(&seq, &sig, &p, p.tpi() / 50.0).unwrap();
        let expected = 2.0 * k as f64 * p.gamma * b * 20e-9;
        assert!((r.phase - expected).abs() < 1e-3 * expected, "{} vs {expected}", r.phase);
        let pop = 0.5 * (1.0 + expected.sin());
        assert!((r.p_ideal - pop).abs() < 1e-3, "{} vs {pop}", r.p_ideal);
    }
}
