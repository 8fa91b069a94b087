//! Timed control-pulse sequences for the three acquisition protocols.
//!
//! Times are global, measured from the first waveform trigger. Every
//! sequence opens with a pi/2 pulse that ends at `T = 0` and closes with a
//! pi/2 pulse whose phase selects the readout quadrature. Pulses are
//! left-aligned: a pulse placed "at" `T` starts at `T`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::SensorParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    IntegrativeRamsey,
    SmallIntervalRamsey,
    DifferentialEcho,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::IntegrativeRamsey => "integrative_ramsey",
            Protocol::SmallIntervalRamsey => "small_interval_ramsey",
            Protocol::DifferentialEcho => "differential_echo",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("pi pulses {first} and {second} overlap")]
    Collision { first: usize, second: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub start: f64,
    pub duration: f64,
    /// Rotation angle in radians.
    pub angle: f64,
    /// Phase of the rotation axis in the xy plane; 0 is x, pi/2 is y.
    pub phase: f64,
}

impl Pulse {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn is_pi(&self) -> bool {
        (self.angle - PI).abs() < 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub protocol: Protocol,
    pub pulses: Vec<Pulse>,
    /// Echo block repetitions; 1 for the Ramsey protocols.
    pub k: u32,
    /// Sample delay relative to the trigger.
    pub t: f64,
    pub tint: f64,
    pub trep: f64,
    pub readout_phase: f64,
}

/// Phase of the final pi/2 pulse that gives `p = (1 + sin(phi)) / 2`
/// for a positive phase accumulated with unit weight.
pub const RAMSEY_READOUT_PHASE: f64 = FRAC_PI_2;
/// Readout phase for the differential protocol; its sensitivity window has
/// negative weight, so the quadrature is flipped to keep positive fields
/// above one half.
pub const ECHO_READOUT_PHASE: f64 = -FRAC_PI_2;

impl PulseSequence {
    /// First pulse start to last pulse end.
    pub fn total_span(&self) -> f64 {
        match (self.pulses.first(), self.pulses.last()) {
            (Some(a), Some(b)) => b.end() - a.start,
            _ => 0.0,
        }
    }

    /// Free evolution between the end of the first pi/2 pulse and the start
    /// of the last one. This is the time over which coherence decays.
    pub fn sensing_span(&self) -> f64 {
        match (self.pulses.first(), self.pulses.last()) {
            (Some(a), Some(b)) if self.pulses.len() >= 2 => b.start - a.end(),
            _ => 0.0,
        }
    }

    pub fn pi_pulses(&self) -> impl Iterator<Item = &Pulse> {
        let n = self.pulses.len();
        self.pulses
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i > 0 && *i + 1 < n)
            .map(|(_, p)| p)
    }

    /// Number of waveform passages the sequence spans.
    pub fn passages(&self) -> u32 {
        match self.protocol {
            Protocol::DifferentialEcho => 2 * self.k,
            _ => 1,
        }
    }

    /// Sign relating the raw accumulated phase to the reported signal phase,
    /// chosen so that a positive field inside the sensing window reads as a
    /// positive phase.
    pub fn signal_sign(&self) -> f64 {
        match self.protocol {
            Protocol::DifferentialEcho => -1.0,
            _ => 1.0,
        }
    }

    /// Offset from the sample delay `t` to the centroid of the sensitivity
    /// window.
    pub fn window_centroid_offset(&self, tpi: f64) -> f64 {
        match self.protocol {
            Protocol::DifferentialEcho => (self.tint + tpi) / 2.0,
            Protocol::SmallIntervalRamsey => self.tint / 2.0,
            Protocol::IntegrativeRamsey => -self.t / 2.0,
        }
    }

    /// Same sequence with the final pi/2 phase replaced.
    pub fn with_readout_phase(mut self, phase: f64) -> Self {
        self.readout_phase = phase;
        if let Some(last) = self.pulses.last_mut() {
            last.phase = phase;
        }
        self
    }

    /// One pulse per line: `start_ns duration_ns angle_deg phase_deg`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for p in &self.pulses {
            out.push_str(&format!(
                "{:.3} {:.3} {:.1} {:.1}\n",
                p.start * 1e9,
                p.duration * 1e9,
                p.angle.to_degrees(),
                p.phase.to_degrees()
            ));
        }
        out
    }
}

fn half_pi(start: f64, tpi: f64, phase: f64) -> Pulse {
    Pulse {
        start,
        duration: tpi / 2.0,
        angle: FRAC_PI_2,
        phase,
    }
}

fn check_delay(t: f64) -> Result<(), SequenceError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SequenceError::Precondition(format!(
            "sample delay must be >= 0, got {t}"
        )));
    }
    Ok(())
}

/// Ramsey sequence whose phase integrates the field over `[0, t]`.
pub fn build_integrative_ramsey(t: f64, p: &SensorParams) -> Result<PulseSequence, SequenceError> {
    check_delay(t)?;
    let tpi = p.tpi();
    Ok(PulseSequence {
        protocol: Protocol::IntegrativeRamsey,
        pulses: vec![
            half_pi(-tpi / 2.0, tpi, 0.0),
            half_pi(t, tpi, RAMSEY_READOUT_PHASE),
        ],
        k: 1,
        t,
        tint: t,
        trep: f64::INFINITY,
        readout_phase: RAMSEY_READOUT_PHASE,
    })
}

/// Ramsey sequence sensitive to `[t, t + tint]` only.
pub fn build_small_interval_ramsey(
    t: f64,
    tint: f64,
    p: &SensorParams,
) -> Result<PulseSequence, SequenceError> {
    check_delay(t)?;
    if !(tint >= 0.0 && tint.is_finite()) {
        return Err(SequenceError::Precondition(format!(
            "integration time must be >= 0, got {tint}"
        )));
    }
    let tpi = p.tpi();
    Ok(PulseSequence {
        protocol: Protocol::SmallIntervalRamsey,
        pulses: vec![
            half_pi(t - tpi / 2.0, tpi, 0.0),
            half_pi(t + tint, tpi, RAMSEY_READOUT_PHASE),
        ],
        k: 1,
        t,
        tint,
        trep: f64::INFINITY,
        readout_phase: RAMSEY_READOUT_PHASE,
    })
}

/// Differential spin-echo sequence: for each of `k` blocks, a pi pulse at
/// `t` in one passage and at `t + tint` in the next.
pub fn build_differential_echo(
    t: f64,
    tint: f64,
    k: u32,
    trep: f64,
    p: &SensorParams,
) -> Result<PulseSequence, SequenceError> {
    check_delay(t)?;
    if k < 1 {
        return Err(SequenceError::Precondition("k must be >= 1".into()));
    }
    if !(trep > 0.0 && trep.is_finite()) {
        return Err(SequenceError::Precondition(format!(
            "repetition time must be positive, got {trep}"
        )));
    }
    if !(tint >= 0.0 && tint.is_finite()) {
        return Err(SequenceError::Precondition(format!(
            "integration time must be >= 0, got {tint}"
        )));
    }
    let tpi = p.tpi();
    // Relative slack so that configurations exactly at the limit pass.
    if t + tint + tpi > trep * (1.0 + 1e-12) {
        return Err(SequenceError::Precondition(format!(
            "t + tint + tpi = {:.3} ns exceeds trep = {:.3} ns",
            (t + tint + tpi) * 1e9,
            trep * 1e9
        )));
    }
    let mut pulses = Vec::with_capacity(2 * k as usize + 2);
    pulses.push(half_pi(-tpi / 2.0, tpi, 0.0));
    for i in 0..2 * k {
        let start = i as f64 * trep + t + if i % 2 == 1 { tint } else { 0.0 };
        pulses.push(Pulse {
            start,
            duration: tpi,
            angle: PI,
            phase: 0.0,
        });
    }
    pulses.push(half_pi(2.0 * k as f64 * trep, tpi, ECHO_READOUT_PHASE));
    let seq = PulseSequence {
        protocol: Protocol::DifferentialEcho,
        pulses,
        k,
        t,
        tint,
        trep,
        readout_phase: ECHO_READOUT_PHASE,
    };
    if let Some((a, b)) = first_overlap(&seq.pulses) {
        // Indices among the pi pulses.
        return Err(SequenceError::Collision {
            first: a.saturating_sub(1),
            second: b.saturating_sub(1),
        });
    }
    Ok(seq)
}

// Tolerance for back-to-back pulses that touch exactly.
const TOUCH_EPS: f64 = 1e-15;

fn first_overlap(pulses: &[Pulse]) -> Option<(usize, usize)> {
    pulses
        .windows(2)
        .enumerate()
        .find(|(_, w)| w[0].end() > w[1].start + TOUCH_EPS)
        .map(|(i, _)| (i, i + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Budget overruns are reported as warnings.
    #[default]
    Soft,
    /// Budget overruns are errors.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    BudgetExceeded { span: f64, t2: f64 },
    Overlap { first: usize, second: usize },
    AmplitudeWarning { peak_to_peak: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match &self.kind {
            DiagnosticKind::BudgetExceeded { span, t2 } => write!(
                f,
                "{sev}: coherence budget exceeded: sequence span {:.3} us > T2 budget {:.3} us",
                span * 1e6,
                t2 * 1e6
            ),
            DiagnosticKind::Overlap { first, second } => {
                write!(f, "{sev}: pulses {first} and {second} overlap")
            }
            DiagnosticKind::AmplitudeWarning {
                peak_to_peak,
                limit,
            } => write!(
                f,
                "{sev}: waveform peak-to-peak {:.3} mT exceeds pi-pulse excitation limit {:.3} mT",
                peak_to_peak * 1e3,
                limit * 1e3
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub budget_mode: BudgetMode,
    /// Allowed span as a multiple of T2.
    pub budget_factor: f64,
    /// Simulated peak-to-peak field of the signal, if known.
    pub peak_to_peak: Option<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            budget_mode: BudgetMode::Soft,
            budget_factor: 1.0,
            peak_to_peak: None,
        }
    }
}

/// Check a sequence against timing and physical limits. An empty result
/// means the sequence is fine.
pub fn validate(seq: &PulseSequence, p: &SensorParams, opts: &ValidateOptions) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for i in 0..seq.pulses.len() {
        for j in i + 1..seq.pulses.len() {
            let (a, b) = (&seq.pulses[i], &seq.pulses[j]);
            if a.start < b.end() - TOUCH_EPS && b.start < a.end() - TOUCH_EPS {
                out.push(Diagnostic {
                    severity: Severity::Error,
                    kind: DiagnosticKind::Overlap {
                        first: i,
                        second: j,
                    },
                });
            }
        }
    }
    let span = seq.sensing_span();
    let budget = p.t2 * opts.budget_factor;
    if span > budget * (1.0 + 1e-12) {
        out.push(Diagnostic {
            severity: match opts.budget_mode {
                BudgetMode::Soft => Severity::Warning,
                BudgetMode::Hard => Severity::Error,
            },
            kind: DiagnosticKind::BudgetExceeded { span, t2: budget },
        });
    }
    if let Some(bpp) = opts.peak_to_peak {
        let limit = p.amplitude_limit();
        if bpp > limit {
            out.push(Diagnostic {
                severity: Severity::Warning,
                kind: DiagnosticKind::AmplitudeWarning {
                    peak_to_peak: bpp,
                    limit,
                },
            });
        }
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}
