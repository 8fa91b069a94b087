//! Sensor response to a pulse sequence and a triggered signal.
//!
//! Two independent backends compute the accumulated phase and population:
//!
//! * the filter path integrates `gamma B(T) f(T)` against the modulation
//!   function (see [`build_modulation`]), ignoring phase picked up during
//!   the pi/2 pulses;
//! * the Bloch path steps the rotating-frame two-level dynamics through
//!   every pulse with exact 2x2 propagators.
//!
//! Coherence decay and projective-readout noise are applied afterwards.

mod bloch;
mod modulation;
mod readout;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::SensorParams;
use crate::sequence::PulseSequence;
use crate::waveform::{EvalError, TriggeredSignal};

pub use bloch::{bloch_evolve, BlochReport};
pub use modulation::{build_modulation, ModulationFunction, Segment, SegmentShape};
pub use readout::{sample_readout, shot_noise_sigma, ReadoutModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("non-finite field value {value} at T = {t:e} s")]
    NonFinite { t: f64, value: f64 },
    #[error("Bloch step {dt:e} s exceeds tpi/50 = {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("state norm drifted by {drift:e} at T = {t:e} s")]
    NormDrift { t: f64, drift: f64 },
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Filter,
    Bloch,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Filter => "filter",
            Backend::Bloch => "bloch",
        }
    }
}

/// Numerical settings shared by both backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    /// Largest Simpson sub-interval of the filter path.
    #[serde(rename = "quad_step_s")]
    pub quad_step: f64,
    /// Bloch time step; `None` uses tpi/50.
    #[serde(rename = "bloch_dt_s", skip_serializing_if = "Option::is_none")]
    pub bloch_dt: Option<f64>,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            quad_step: 0.25e-9,
            bloch_dt: None,
        }
    }
}

/// Result of evaluating one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensorOutput {
    pub p_ideal: f64,
    pub p_decohered: f64,
    pub p_sampled: f64,
    pub sem: f64,
    /// Signal phase, positive for a positive field inside the sensing
    /// window.
    pub phase: f64,
}

// Composite Simpson over [a, b] with sub-intervals no longer than `step`.
fn simpson<F>(a: f64, b: f64, step: f64, mut f: F) -> Result<f64, SimError>
where
    F: FnMut(f64) -> Result<f64, SimError>,
{
    if b <= a {
        return Ok(0.0);
    }
    let mut n = ((b - a) / step).ceil() as usize;
    n = n.max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64)?;
    }
    Ok(acc * h / 3.0)
}

/// Raw accumulated phase `gamma * integral B(T) f(T) dT`.
///
/// Each modulation segment is split at the signal's breakpoints so that
/// jumps in the field never fall inside a Simpson panel.
pub fn raw_phase(
    modulation: &ModulationFunction,
    sig: &TriggeredSignal,
    p: &SensorParams,
    settings: &SimSettings,
) -> Result<f64, SimError> {
    let mut total = 0.0;
    for seg in &modulation.segments {
        let mut edges = vec![seg.start];
        edges.extend(
            sig.breakpoints(seg.start, seg.end)
                .into_iter()
                .filter(|&b| b > seg.start && b < seg.end),
        );
        edges.push(seg.end);
        for w in edges.windows(2) {
            // Evaluate the field just inside each panel so a jump exactly
            // at an edge takes the value of the side being integrated.
            let (a, b) = (w[0], w[1]);
            let nudge = (b - a) * 1e-9;
            total += simpson(a, b, settings.quad_step, |t| {
                let te = t.clamp(a + nudge, b - nudge);
                let v = sig.field(te)?;
                if !v.is_finite() {
                    return Err(SimError::NonFinite { t, value: v });
                }
                Ok(v * seg.weight(t))
            })?;
        }
    }
    Ok(p.gamma * total)
}

/// Signal phase of `seq` through the filter path.
pub fn phase_filter(
    seq: &PulseSequence,
    sig: &TriggeredSignal,
    p: &SensorParams,
    settings: &SimSettings,
) -> Result<f64, SimError> {
    let m = build_modulation(seq);
    Ok(seq.signal_sign() * raw_phase(&m, sig, p, settings)?)
}

/// Upper-level population after a final pi/2 pulse of phase `readout_phase`
/// applied to a state that accumulated `raw_phase`.
pub fn readout_population(raw_phase: f64, readout_phase: f64) -> f64 {
    0.5 * (1.0 + (readout_phase - raw_phase).cos())
}

/// Contrast decay about one half over a free-evolution span.
pub fn apply_decoherence(p_ideal: f64, span: f64, p: &SensorParams) -> f64 {
    0.5 + (p_ideal - 0.5) * contrast_factor(span, p)
}

/// `exp(-(span / T2)^n)`.
pub fn contrast_factor(span: f64, p: &SensorParams) -> f64 {
    if span <= 0.0 {
        return 1.0;
    }
    (-(span / p.t2).powf(p.decay_stretch)).exp()
}

/// Ideal population and signal phase from the selected backend.
pub fn evaluate_ideal(
    seq: &PulseSequence,
    sig: &TriggeredSignal,
    p: &SensorParams,
    backend: Backend,
    settings: &SimSettings,
) -> Result<(f64, f64), SimError> {
    match backend {
        Backend::Filter => {
            let m = build_modulation(seq);
            let raw = raw_phase(&m, sig, p, settings)?;
            Ok((
                readout_population(raw, seq.readout_phase),
                seq.signal_sign() * raw,
            ))
        }
        Backend::Bloch => {
            let dt = settings.bloch_dt.unwrap_or(p.tpi() / 50.0);
            let r = bloch_evolve(seq, sig, p, dt)?;
            Ok((r.p_ideal, r.phase))
        }
    }
}

/// Full sensor output: ideal response, coherence decay and (optionally)
/// shot-noise sampling with the draw keyed by `draw_index`.
pub fn simulate(
    seq: &PulseSequence,
    sig: &TriggeredSignal,
    p: &SensorParams,
    backend: Backend,
    settings: &SimSettings,
    readout: Option<&ReadoutModel>,
    draw_index: u64,
) -> Result<SensorOutput, SimError> {
    let (p_ideal, phase) = evaluate_ideal(seq, sig, p, backend, settings)?;
    let p_decohered = apply_decoherence(p_ideal, seq.sensing_span(), p);
    let (p_sampled, sem) = match readout {
        Some(r) => sample_readout(p_decohered, r, draw_index),
        None => (p_decohered, 0.0),
    };
    Ok(SensorOutput {
        p_ideal,
        p_decohered,
        p_sampled,
        sem,
        phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{build_differential_echo, build_small_interval_ramsey};
    use crate::waveform::Waveform;

    fn constant(b: f64, trep: f64, passages: u32) -> TriggeredSignal {
        TriggeredSignal::new(Waveform::constant(b), trep)
            .unwrap()
            .with_passages(passages)
    }

    #[test]
    fn small_interval_constant_field() {
        let p = SensorParams {
            gamma: 1.7608e11,
            ..SensorParams::default()
        };
        let seq = build_small_interval_ramsey(100e-9, 20e-9, &p).unwrap();
        let sig = TriggeredSignal::new(Waveform::constant(100e-6), 1e-6).unwrap();
        let phi = phase_filter(&seq, &sig, &p, &SimSettings::default()).unwrap();
        assert!((phi - 0.352_16).abs() < 1e-6, "{phi}");
    }

    #[test]
    fn differential_constant_field_ideal_pulses() {
        let p = SensorParams {
            gamma: 1.7608e11,
            tpi_override: Some(1e-13),
            ..SensorParams::default()
        };
        let trep = 344e-9;
        let seq = build_differential_echo(50e-9, 20e-9, 1, trep, &p).unwrap();
        let phi = phase_filter(&seq, &constant(10e-6, trep, 2), &p, &SimSettings::default())
            .unwrap();
        assert!((phi - 0.070_432).abs() < 1e-6, "{phi}");
    }

    #[test]
    fn differential_constant_field_is_independent_of_pulse_length() {
        // The kernel integrates to -2 tint for any pi-pulse duration.
        let trep = 344e-9;
        for tpi in [2.5e-9, 10e-9, 20e-9, 40e-9] {
            let p = SensorParams {
                tpi_override: Some(tpi),
                ..SensorParams::default()
            };
            let seq = build_differential_echo(30e-9, 20e-9, 3, trep, &p).unwrap();
            let phi = phase_filter(&seq, &constant(10e-6, trep, 6), &p, &SimSettings::default())
                .unwrap();
            let expected = 2.0 * 3.0 * p.gamma * 10e-6 * 20e-9;
            assert!((phi - expected).abs() < 1e-9, "tpi {tpi}: {phi} vs {expected}");
        }
    }

    #[test]
    fn zero_field_gives_zero_phase() {
        let p = SensorParams::default();
        let seq = build_differential_echo(0.0, 20e-9, 2, 344e-9, &p).unwrap();
        let sig = TriggeredSignal::new(Waveform::zero(), 344e-9).unwrap();
        assert_eq!(phase_filter(&seq, &sig, &p, &SimSettings::default()).unwrap(), 0.0);
        let (pop, _) =
            evaluate_ideal(&seq, &sig, &p, Backend::Filter, &SimSettings::default()).unwrap();
        assert!((pop - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_finite_field_is_reported() {
        let p = SensorParams::default();
        let seq = build_small_interval_ramsey(0.0, 20e-9, &p).unwrap();
        let sig = TriggeredSignal::new(
            crate::waveform::parse_waveform_expr("sqrt(-1)").unwrap(),
            1e-6,
        )
        .unwrap();
        assert!(matches!(
            phase_filter(&seq, &sig, &p, &SimSettings::default()),
            Err(SimError::NonFinite { .. })
        ));
    }

    #[test]
    fn decoherence_examples() {
        let p = SensorParams::default();
        assert_eq!(apply_decoherence(0.8, 0.0, &p), 0.8);
        let dp = apply_decoherence(0.5 + 0.267, 5.504e-6, &p) - 0.5;
        assert!((dp - 0.180).abs() < 5e-4, "{dp}");
        let dp = apply_decoherence(1.0, p.t2, &p) - 0.5;
        assert!((dp - 0.5 / std::f64::consts::E).abs() < 1e-15);
        let inf = SensorParams {
            t2: f64::INFINITY,
            ..p
        };
        assert_eq!(apply_decoherence(0.9, 1.0, &inf), 0.9);
    }

    #[test]
    fn readout_population_conventions() {
        use std::f64::consts::FRAC_PI_2;
        let phi = 0.3;
        assert!((readout_population(phi, FRAC_PI_2) - 0.5 * (1.0 + phi.sin())).abs() < 1e-15);
        assert!((readout_population(phi, -FRAC_PI_2) - 0.5 * (1.0 - phi.sin())).abs() < 1e-15);
        assert!((readout_population(phi, 0.0) - 0.5 * (1.0 + phi.cos())).abs() < 1e-15);
    }
}
