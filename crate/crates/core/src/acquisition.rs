//! Equivalent-time sweeps over the sample delay and conversion of sensor
//! populations to field estimates.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::sensor::SensorParams;
use crate::sequence::{
    build_differential_echo, build_integrative_ramsey, build_small_interval_ramsey, has_errors,
    validate, BudgetMode, Diagnostic, Protocol, PulseSequence, SequenceError, ValidateOptions,
};
use crate::sim::{
    contrast_factor, shot_noise_sigma, simulate, Backend, ReadoutModel, SimError, SimSettings,
};
use crate::waveform::{EvalError, TriggeredSignal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcqError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("sequence at t = {t_ns:.3} ns: {source}")]
    Sequence {
        t_ns: f64,
        #[source]
        source: SequenceError,
    },
    #[error("sequence at t = {t_ns:.3} ns failed validation: {}", join(.diagnostics))]
    Validation {
        t_ns: f64,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("simulation at t = {t_ns:.3} ns: {source}")]
    Sim {
        t_ns: f64,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("population {p} is outside the invertible range of the arcsine conversion")]
    Saturation { p: f64 },
    #[error("{0}")]
    Reconstruction(String),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// Population-to-field conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conversion {
    /// `(2p - 1) / (2 k gamma tint)`.
    #[default]
    Linear,
    /// `asin(2p - 1) / (2 k gamma tint)`.
    Arcsine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub protocol: Protocol,
    #[serde(rename = "t_start_s")]
    pub t_start: f64,
    #[serde(rename = "t_stop_s")]
    pub t_stop: f64,
    /// Sample step.
    #[serde(rename = "ts_s")]
    pub ts: f64,
    #[serde(rename = "tint_s", default)]
    pub tint: f64,
    #[serde(default = "one")]
    pub k: u32,
    /// Sequences averaged per point; `None` is a noiseless readout.
    #[serde(default)]
    pub n_shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub conversion: Conversion,
    /// Divide the population contrast by the coherence decay before
    /// converting to field.
    #[serde(default)]
    pub decoherence_correction: bool,
    /// Overrides the protocol's final pi/2 phase.
    #[serde(default, rename = "readout_phase_rad")]
    pub readout_phase: Option<f64>,
    #[serde(default)]
    pub budget_mode: BudgetMode,
}

fn one() -> u32 {
    1
}

impl SweepConfig {
    pub fn new(protocol: Protocol, t_start: f64, t_stop: f64, ts: f64) -> Self {
        Self {
            protocol,
            t_start,
            t_stop,
            ts,
            tint: 0.0,
            k: 1,
            n_shots: None,
            seed: 0,
            conversion: Conversion::Linear,
            decoherence_correction: false,
            readout_phase: None,
            budget_mode: BudgetMode::Soft,
        }
    }

    pub fn validate(&self) -> Result<(), AcqError> {
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(AcqError::Config(format!("ts must be > 0, got {}", self.ts)));
        }
        if !(self.t_stop > self.t_start) || !self.t_start.is_finite() || !self.t_stop.is_finite()
        {
            return Err(AcqError::Config(format!(
                "t_stop ({}) must exceed t_start ({})",
                self.t_stop, self.t_start
            )));
        }
        if self.t_start < 0.0 {
            return Err(AcqError::Config("t_start must be >= 0".into()));
        }
        if self.k == 0 {
            return Err(AcqError::Config("k must be >= 1".into()));
        }
        if self.n_shots == Some(0) {
            return Err(AcqError::Config("n_shots must be >= 1".into()));
        }
        Ok(())
    }

    /// `floor((t_stop - t_start) / ts) + 1`.
    pub fn n_points(&self) -> usize {
        ((self.t_stop - self.t_start) / self.ts + 1e-9).floor() as usize + 1
    }

    pub fn delay(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.ts
    }

    pub fn build_sequence(
        &self,
        t: f64,
        trep: f64,
        p: &SensorParams,
    ) -> Result<PulseSequence, SequenceError> {
        let seq = match self.protocol {
            Protocol::IntegrativeRamsey => build_integrative_ramsey(t, p)?,
            Protocol::SmallIntervalRamsey => build_small_interval_ramsey(t, self.tint, p)?,
            Protocol::DifferentialEcho => build_differential_echo(t, self.tint, self.k, trep, p)?,
        };
        Ok(match self.readout_phase {
            Some(psi) => seq.with_readout_phase(psi),
            None => seq,
        })
    }

    fn readout(&self, p: &SensorParams) -> Option<ReadoutModel> {
        self.n_shots.map(|n| ReadoutModel {
            n_shots: n,
            readout_c: p.readout_c,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub t: f64,
    pub p_mean: f64,
    pub p_sem: f64,
    pub b_est: Option<f64>,
    pub b_sem: Option<f64>,
    /// Input waveform at the centre of the sensing window.
    pub b_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub metadata: Value,
}

pub const SWEEP_CSV_HEADER: &str = "t_ns,p_mean,p_sem,B_est_T,B_sem_T,B_true_T";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.points.len() + 1));
        out.push_str(SWEEP_CSV_HEADER);
        out.push('\n');
        for pt in &self.points {
            out.push_str(&format!(
                "{:.6},{:e},{:e},{},{},{:e}\n",
                pt.t * 1e9,
                pt.p_mean,
                pt.p_sem,
                opt(pt.b_est),
                opt(pt.b_sem),
                pt.b_true
            ));
        }
        out
    }

    /// Parse a record written by [`Self::to_csv`]; metadata is left empty.
    pub fn from_csv(text: &str) -> Result<Self, AcqError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == SWEEP_CSV_HEADER => {}
            _ => {
                return Err(AcqError::Config(format!(
                    "expected header {SWEEP_CSV_HEADER}"
                )))
            }
        }
        let num = |s: &str, row: usize| -> Result<f64, AcqError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| AcqError::Config(format!("row {row}: bad number {s:?}")))
        };
        let mut points = Vec::new();
        for (row, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(AcqError::Config(format!(
                    "row {}: expected 6 fields, got {}",
                    row + 1,
                    f.len()
                )));
            }
            let maybe = |s: &str| -> Result<Option<f64>, AcqError> {
                if s.trim().is_empty() {
                    Ok(None)
                } else {
                    num(s, row + 1).map(Some)
                }
            };
            points.push(SweepPoint {
                t: num(f[0], row + 1)? * 1e-9,
                p_mean: num(f[1], row + 1)?,
                p_sem: num(f[2], row + 1)?,
                b_est: maybe(f[3])?,
                b_sem: maybe(f[4])?,
                b_true: num(f[5], row + 1)?,
            });
        }
        Ok(Self {
            points,
            metadata: json!({}),
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// Field estimates, with missing entries as NaN.
    pub fn b_est(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.b_est.unwrap_or(f64::NAN))
            .collect()
    }

    pub fn b_true(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.b_true).collect()
    }

    pub fn p_mean(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_mean).collect()
    }
}

/// Field from a differential-protocol population.
///
/// For `p = (1 + sin(phi)) / 2` with `phi = 2 k gamma B tint`, the linear
/// mode inverts the small-angle form and the arcsine mode inverts exactly.
pub fn field_from_population(
    p_val: f64,
    k: u32,
    tint: f64,
    p: &SensorParams,
    conversion: Conversion,
) -> Result<f64, AcqError> {
    field_from_contrast(2.0 * p_val - 1.0, k, tint, p, conversion)
}

fn field_from_contrast(
    x: f64,
    k: u32,
    tint: f64,
    p: &SensorParams,
    conversion: Conversion,
) -> Result<f64, AcqError> {
    let scale = 2.0 * k as f64 * p.gamma * tint;
    match conversion {
        Conversion::Linear => Ok(x / scale),
        Conversion::Arcsine => {
            if x.abs() >= 1.0 {
                Err(AcqError::Saturation { p: 0.5 * (1.0 + x) })
            } else {
                Ok(x.asin() / scale)
            }
        }
    }
}

// dB/dp of the conversion at contrast x.
fn conversion_slope(x: f64, k: u32, tint: f64, p: &SensorParams, conversion: Conversion) -> f64 {
    let scale = 2.0 * k as f64 * p.gamma * tint;
    match conversion {
        Conversion::Linear => 2.0 / scale,
        Conversion::Arcsine => 2.0 / (scale * (1.0 - x * x).max(1e-300).sqrt()),
    }
}

/// Offset from the sweep delay to the time the field estimate refers to.
pub fn estimate_offset(seq: &PulseSequence, tpi: f64) -> f64 {
    match seq.protocol {
        Protocol::IntegrativeRamsey => 0.0,
        _ => seq.window_centroid_offset(tpi),
    }
}

/// Run `f` on a pool of `jobs` workers, or on the global pool for `None`.
pub fn with_workers<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

struct Prepared<'a> {
    cfg: &'a SweepConfig,
    sig: TriggeredSignal,
    p: &'a SensorParams,
    backend: Backend,
    settings: &'a SimSettings,
    readout: Option<ReadoutModel>,
    opts: ValidateOptions,
}

impl Prepared<'_> {
    fn sequence(&self, t: f64) -> Result<PulseSequence, AcqError> {
        let t_ns = t * 1e9;
        let seq = self
            .cfg
            .build_sequence(t, self.sig.trep(), self.p)
            .map_err(|source| AcqError::Sequence { t_ns, source })?;
        let diagnostics = validate(&seq, self.p, &self.opts);
        if has_errors(&diagnostics) {
            return Err(AcqError::Validation { t_ns, diagnostics });
        }
        Ok(seq)
    }

    fn point(&self, i: usize, phase_override: Option<f64>, draw: u64) -> Result<SweepPoint, AcqError> {
        let cfg = self.cfg;
        let t = cfg.delay(i);
        let t_ns = t * 1e9;
        let mut seq = self.sequence(t)?;
        if let Some(psi) = phase_override {
            seq = seq.with_readout_phase(psi);
        }
        let out = simulate(
            &seq,
            &self.sig,
            self.p,
            self.backend,
            self.settings,
            self.readout.as_ref(),
            draw,
        )
        .map_err(|source| AcqError::Sim { t_ns, source })?;
        let b_true = self
            .sig
            .emitted()
            .eval(t + estimate_offset(&seq, self.p.tpi()))?;
        let (b_est, b_sem) = if cfg.protocol == Protocol::DifferentialEcho {
            let contrast = if cfg.decoherence_correction {
                contrast_factor(seq.sensing_span(), self.p)
            } else {
                1.0
            };
            let x = (2.0 * out.p_sampled - 1.0) / contrast;
            let b = field_from_contrast(x, cfg.k, cfg.tint, self.p, cfg.conversion)?;
            let slope = conversion_slope(x, cfg.k, cfg.tint, self.p, cfg.conversion) / contrast;
            (Some(b), Some(out.sem * slope))
        } else {
            (None, None)
        };
        Ok(SweepPoint {
            t,
            p_mean: out.p_sampled,
            p_sem: out.sem,
            b_est,
            b_sem,
            b_true,
        })
    }
}

fn prepare<'a>(
    cfg: &'a SweepConfig,
    sig: &TriggeredSignal,
    p: &'a SensorParams,
    backend: Backend,
    settings: &'a SimSettings,
) -> Result<Prepared<'a>, AcqError> {
    cfg.validate()?;
    p.validate()
        .map_err(|e| AcqError::Config(e.to_string()))?;
    let passages = match cfg.protocol {
        Protocol::DifferentialEcho => 2 * cfg.k,
        _ => 1,
    };
    let sig = if sig.n_passages().is_none() {
        sig.clone().with_passages(passages)
    } else {
        sig.clone()
    };
    let opts = ValidateOptions {
        budget_mode: cfg.budget_mode,
        ..ValidateOptions::default()
    };
    Ok(Prepared {
        cfg,
        sig,
        p,
        backend,
        settings,
        readout: cfg.readout(p),
        opts,
    })
}

fn metadata(prep: &Prepared<'_>, extra: Value) -> Value {
    let cfg = prep.cfg;
    let seq = prep.sequence(cfg.t_start).ok();
    let offset = seq
        .as_ref()
        .map(|s| estimate_offset(s, prep.p.tpi()))
        .unwrap_or(0.0);
    let mut warnings: Vec<String> = Vec::new();
    if let Some(s) = &seq {
        let opts = ValidateOptions {
            peak_to_peak: prep.sig.peak_to_peak(4096).ok(),
            ..prep.opts
        };
        warnings = validate(s, prep.p, &opts).iter().map(|d| d.to_string()).collect();
    }
    let mut m = json!({
        "sweep": cfg,
        "sensor": prep.p,
        "backend": prep.backend.name(),
        "sim_settings": prep.settings,
        "n_points": cfg.n_points(),
        "trep_s": prep.sig.trep(),
        "tpi_s": prep.p.tpi(),
        "lowpass_rise_10_90_s": prep.sig.lowpass_rise_10_90(),
        "sigma_p": cfg.n_shots.map(|n| shot_noise_sigma(prep.p.readout_c, n)),
        "estimate_offset_s": offset,
        "sensing_span_s": seq.as_ref().map(|s| s.sensing_span()),
        "diagnostics": warnings,
        "conventions": {
            "time_origin": "first waveform trigger; the opening pi/2 pulse ends at T = 0",
            "t_ns": "sweep delay t; the estimate refers to t + estimate_offset_s",
            "B_true_T": "input waveform (after any low-pass) at t + estimate_offset_s",
            "B_est_T": "(2p - 1) / (2 k gamma tint), or its arcsine form",
            "readout_noise": "Gaussian, sigma_p = 1 / (2 C sqrt(n_shots)), clipped to [0, 1]",
            "rng": "ChaCha8 seeded by `seed`, stream selected by point index",
        },
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut m, extra) {
        m.extend(e);
    }
    m
}

/// Sweep the delay `t` over `cfg` and evaluate every point.
///
/// Points are evaluated in parallel on the current rayon pool; each draw is
/// keyed by point index, so output never depends on scheduling.
pub fn run_sweep(
    cfg: &SweepConfig,
    sig: &TriggeredSignal,
    p: &SensorParams,
    backend: Backend,
    settings: &SimSettings,
) -> Result<SweepResult, AcqError> {
    let indices: Vec<usize> = (0..cfg.n_points()).collect();
    let points = run_sweep_points(cfg, sig, p, backend, settings, &indices)?;
    let prep = prepare(cfg, sig, p, backend, settings)?;
    Ok(SweepResult {
        points,
        metadata: metadata(&prep, json!({})),
    })
}

/// Evaluate the given point indices of a sweep, in the given order.
pub fn run_sweep_points(
    cfg: &SweepConfig,
    sig: &TriggeredSignal,
    p: &SensorParams,
    backend: Backend,
    settings: &SimSettings,
    indices: &[usize],
) -> Result<Vec<SweepPoint>, AcqError> {
    let prep = prepare(cfg, sig, p, backend, settings)?;
    indices
        .par_iter()
        .map(|&i| prep.point(i, None, i as u64))
        .collect()
}

/// Quadrature pair of a phase-cycled point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub t: f64,
    /// `2 p - 1` at readout phase `psi + pi/2`: proportional to `cos(phi)`.
    pub x: f64,
    /// `2 p - 1` at readout phase `psi`: proportional to `sin(phi)`.
    pub y: f64,
    pub phase_cycled: f64,
    pub phase_linear: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycledSweep {
    /// Points at the base readout phase, with `b_est` from the cycled phase.
    pub result: SweepResult,
    pub quadratures: Vec<Quadrature>,
}

/// Small-angle phase estimate from one quadrature.
pub fn linear_phase_estimate(y: f64) -> f64 {
    y
}

/// Full-range phase estimate from both quadratures.
pub fn cycled_phase_estimate(x: f64, y: f64) -> f64 {
    y.atan2(x)
}

/// Differential sweep read out at `psi` and `psi + pi/2`.
pub fn phase_cycled_readout(
    cfg: &SweepConfig,
    sig: &TriggeredSignal,
    p: &SensorParams,
    backend: Backend,
    settings: &SimSettings,
) -> Result<CycledSweep, AcqError> {
    if cfg.protocol != Protocol::DifferentialEcho {
        return Err(AcqError::Config(
            "phase cycling requires the differential protocol".into(),
        ));
    }
    let prep = prepare(cfg, sig, p, backend, settings)?;
    let psi = cfg
        .readout_phase
        .unwrap_or(crate::sequence::ECHO_READOUT_PHASE);
    let pairs: Vec<(SweepPoint, SweepPoint)> = (0..cfg.n_points())
        .into_par_iter()
        .map(|i| {
            let a = prep.point(i, Some(psi), 2 * i as u64)?;
            let b = prep.point(i, Some(psi + FRAC_PI_2), 2 * i as u64 + 1)?;
            Ok((a, b))
        })
        .collect::<Result<_, AcqError>>()?;
    let scale = 2.0 * cfg.k as f64 * p.gamma * cfg.tint;
    let mut points = Vec::with_capacity(pairs.len());
    let mut quadratures = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let y = 2.0 * a.p_mean - 1.0;
        let x = 2.0 * b.p_mean - 1.0;
        let phase_cycled = cycled_phase_estimate(x, y);
        quadratures.push(Quadrature {
            t: a.t,
            x,
            y,
            phase_cycled,
            phase_linear: linear_phase_estimate(y),
        });
        // Uncertainty of atan2 for equal quadrature noise.
        let r2 = (x * x + y * y).max(1e-300);
        let sem = 2.0 * a.p_sem / r2.sqrt();
        points.push(SweepPoint {
            b_est: Some(phase_cycled / scale),
            b_sem: Some(sem / scale),
            ..a
        });
    }
    Ok(CycledSweep {
        result: SweepResult {
            points,
            metadata: metadata(&prep, json!({ "phase_cycling": { "psi_rad": psi } })),
        },
        quadratures,
    })
}

/// Field from an integrative-Ramsey record by smoothing and differentiating.
///
/// `s_j` is the mean of `p[j..j + window]`; the derivative
/// `(s_{j+1} - s_{j-1}) / (2 ts)` is placed at `t_j + (window - 1) ts / 2`
/// and scaled by `2 / gamma`. Points whose stencil would leave the record
/// are dropped, giving `n - window - 1` outputs.
pub fn reconstruct_ramsey(
    raw: &SweepResult,
    window: usize,
    p: &SensorParams,
) -> Result<SweepResult, AcqError> {
    let protocol = raw
        .metadata
        .pointer("/sweep/protocol")
        .and_then(Value::as_str);
    if protocol.is_some_and(|s| s != Protocol::IntegrativeRamsey.name()) {
        return Err(AcqError::Reconstruction(format!(
            "reconstruction needs an integrative_ramsey record, got {}",
            protocol.unwrap_or("?")
        )));
    }
    let window = window.max(1);
    let n = raw.points.len();
    if n < window + 2 {
        return Err(AcqError::Reconstruction(format!(
            "need at least {} points for a {window}-point window, got {n}",
            window + 2
        )));
    }
    let ts = raw.points[1].t - raw.points[0].t;
    if ts <= 0.0 {
        return Err(AcqError::Reconstruction("non-increasing time grid".into()));
    }
    let pm: Vec<f64> = raw.p_mean();
    let smooth: Vec<f64> = pm
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    let gain = 2.0 / (p.gamma * 2.0 * ts);
    let shift = (window as f64 - 1.0) * ts / 2.0;
    let mut points = Vec::with_capacity(n - window - 1);
    for j in 1..smooth.len() - 1 {
        let d = smooth[j + 1] - smooth[j - 1];
        // Stencil coefficients over raw[j-1 ..= j+window].
        let mut var = 0.0;
        for (off, pt) in raw.points[j - 1..=j + window].iter().enumerate() {
            let i = j - 1 + off;
            let plus = (i > j && i <= j + window) as i32 as f64;
            let minus = (i + 1 >= j && i + 1 < j + window) as i32 as f64;
            let c = (plus - minus) / window as f64;
            var += c * c * pt.p_sem * pt.p_sem;
        }
        let t = raw.points[j].t + shift;
        points.push(SweepPoint {
            t,
            p_mean: smooth[j],
            p_sem: 0.0,
            b_est: Some(gain * d),
            b_sem: Some(gain * var.sqrt()),
            b_true: interp(&raw.points, t),
        });
    }
    let mut metadata = raw.metadata.clone();
    if let Value::Object(m) = &mut metadata {
        m.insert(
            "ramsey_reconstruction".into(),
            json!({
                "window": window,
                "derivative": "central difference of smoothed p over 2 ts, times 2 / gamma",
                "timestamp": "t_j + (window - 1) ts / 2",
                "p_mean": "smoothed population",
            }),
        );
    }
    Ok(SweepResult { points, metadata })
}

fn interp(points: &[SweepPoint], t: f64) -> f64 {
    let i = points.partition_point(|p| p.t <= t);
    if i == 0 {
        return points[0].b_true;
    }
    if i >= points.len() {
        return points[points.len() - 1].b_true;
    }
    let (a, b) = (&points[i - 1], &points[i]);
    a.b_true + (b.b_true - a.b_true) * (t - a.t) / (b.t - a.t)
}
