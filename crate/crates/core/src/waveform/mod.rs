//! Magnetic field waveforms and their triggered repetition.
//!
//! A [`Waveform`] is a scalar field `B(t)` in tesla, where `t` is the time in
//! seconds since the most recent trigger. A [`TriggeredSignal`] repeats a
//! waveform every `trep` seconds for a finite or unbounded number of
//! passages, optionally through the first-order low-pass of the test circuit.

mod expr;
mod lowpass;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use expr::{parse_expr, BinaryOp, EvalError, Expr, Func, ParseError, ParseErrorKind};
pub use lowpass::{apply_circuit_lowpass, lowpass_time_constant};

/// Formula used for the multi-component demonstration waveform, amplitude
/// 81.87 uT and fundamental 1 MHz.
pub const FIG4_EXPR: &str = "81.87e-6 * sin(2*pi*1e6*t/2)^2 * (sin(12*2*pi*1e6*t) * cos(2*pi*1e6*t) * sin(2*pi*1e6*t)^2)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveformError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown built-in waveform '{0}' (expected square270, sine4MHz or fig4)")]
    UnknownBuiltin(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("waveform file line {line}: {msg}")]
    File { line: usize, msg: String },
}

/// Interpolation between uniformly spaced samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Linear,
    /// Zero-order hold: value of the preceding sample.
    Hold,
}

/// Uniformly spaced samples starting at `t = 0`, zero outside their support.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    pub dt: f64,
    pub values: Vec<f64>,
    pub interpolation: Interpolation,
}

impl SampledWaveform {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self, WaveformError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(WaveformError::InvalidParameter(format!(
                "sample spacing must be positive, got {dt}"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(WaveformError::InvalidParameter(format!(
                "non-finite sample value {v}"
            )));
        }
        Ok(Self {
            dt,
            values,
            interpolation: Interpolation::Linear,
        })
    }

    pub fn duration(&self) -> f64 {
        self.values.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        if n == 0 || t < 0.0 {
            return 0.0;
        }
        let x = t / self.dt;
        let i = x.floor() as usize;
        if i >= n - 1 {
            // Last sample holds at the end of the support, up to rounding
            // of `t / dt`.
            return if x <= (n - 1) as f64 * (1.0 + 1e-12) {
                self.values[n - 1]
            } else {
                0.0
            };
        }
        match self.interpolation {
            Interpolation::Hold => self.values[i],
            Interpolation::Linear => {
                let frac = x - i as f64;
                self.values[i] + (self.values[i + 1] - self.values[i]) * frac
            }
        }
    }

    /// Parse the plain-text format: a `dt_ns=<float>` header followed by one
    /// tesla value per line. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self, WaveformError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(WaveformError::File {
            line: 1,
            msg: "missing dt_ns header".into(),
        })?;
        let dt_ns: f64 = header
            .strip_prefix("dt_ns=")
            .ok_or_else(|| WaveformError::File {
                line: hline,
                msg: format!("expected 'dt_ns=<float>' header, found '{header}'"),
            })?
            .trim()
            .parse()
            .map_err(|e| WaveformError::File {
                line: hline,
                msg: format!("bad dt_ns value: {e}"),
            })?;
        let mut values = Vec::new();
        for (line, l) in lines {
            let v: f64 = l.parse().map_err(|e| WaveformError::File {
                line,
                msg: format!("bad sample '{l}': {e}"),
            })?;
            values.push(v);
        }
        Self::new(dt_ns * 1e-9, values)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dt_ns={}\n", self.dt * 1e9);
        for v in &self.values {
            out.push_str(&format!("{v:e}\n"));
        }
        out
    }
}

/// Scalar magnetic field as a function of time since trigger.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    /// Parsed analytic expression in `t`.
    Expression(Expr),
    Samples(SampledWaveform),
    /// Rectangular pulse of `width` seconds beginning at `start`.
    Square { amplitude: f64, start: f64, width: f64 },
    /// Step to `amplitude` at `start`.
    Step { amplitude: f64, start: f64 },
    /// `amplitude * sin(2 pi frequency t)`.
    Sine { amplitude: f64, frequency: f64 },
    /// Gaussian bump with peak `amplitude`, centre and full width at half
    /// maximum.
    Gaussian { amplitude: f64, center: f64, fwhm: f64 },
    Sum(Vec<Waveform>),
}

/// Coarse classification of a [`Waveform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveformKind {
    Expression,
    Samples,
    Builtin,
}

/// Named waveforms used by the bundled scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// 270 ns square pulse of 10 uT starting 50 ns after the trigger.
    Square270,
    /// 10 uT sine at 4 MHz.
    Sine4MHz,
    /// Multi-component waveform of [`FIG4_EXPR`].
    Fig4,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Square270 => "square270",
            Builtin::Sine4MHz => "sine4MHz",
            Builtin::Fig4 => "fig4",
        }
    }

    pub fn waveform(self) -> Waveform {
        match self {
            Builtin::Square270 => Waveform::Square {
                amplitude: 10e-6,
                start: 50e-9,
                width: 270e-9,
            },
            Builtin::Sine4MHz => Waveform::Sine {
                amplitude: 10e-6,
                frequency: 4e6,
            },
            Builtin::Fig4 => Waveform::Expression(
                parse_expr(FIG4_EXPR).expect("built-in expression parses"),
            ),
        }
    }
}

impl FromStr for Builtin {
    type Err = WaveformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "square270" => Ok(Builtin::Square270),
            "sine4MHz" => Ok(Builtin::Sine4MHz),
            "fig4" => Ok(Builtin::Fig4),
            _ => Err(WaveformError::UnknownBuiltin(s.to_string())),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parse an expression source into a waveform.
pub fn parse_waveform_expr(src: &str) -> Result<Waveform, WaveformError> {
    Ok(Waveform::Expression(parse_expr(src)?))
}

impl Waveform {
    pub fn zero() -> Self {
        Waveform::Expression(Expr::Number(0.0))
    }

    pub fn constant(value: f64) -> Self {
        Waveform::Expression(Expr::Number(value))
    }

    pub fn builtin(name: &str) -> Result<Self, WaveformError> {
        Ok(name.parse::<Builtin>()?.waveform())
    }

    pub fn kind(&self) -> WaveformKind {
        match self {
            Waveform::Expression(_) => WaveformKind::Expression,
            Waveform::Samples(_) => WaveformKind::Samples,
            _ => WaveformKind::Builtin,
        }
    }

    /// Field in tesla at time `t` since trigger.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Waveform::Expression(e) => e.eval(t)?,
            Waveform::Samples(s) => s.eval(t),
            Waveform::Square {
                amplitude,
                start,
                width,
            } => {
                if t >= *start && t < start + width {
                    *amplitude
                } else {
                    0.0
                }
            }
            Waveform::Step { amplitude, start } => {
                if t >= *start {
                    *amplitude
                } else {
                    0.0
                }
            }
            Waveform::Sine {
                amplitude,
                frequency,
            } => amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin(),
            Waveform::Gaussian {
                amplitude,
                center,
                fwhm,
            } => {
                let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
                let u = (t - center) / sigma;
                amplitude * (-0.5 * u * u).exp()
            }
            Waveform::Sum(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.eval(t)?;
                }
                acc
            }
        })
    }

    /// Times inside `[lo, hi]` where the waveform jumps. Quadrature and time
    /// stepping split intervals here.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(lo, hi, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        let mut push = |x: f64| {
            if x >= lo && x <= hi {
                out.push(x);
            }
        };
        match self {
            Waveform::Square { start, width, .. } => {
                push(*start);
                push(start + width);
            }
            Waveform::Step { start, .. } => push(*start),
            Waveform::Samples(s) => {
                push(0.0);
                push(s.duration());
            }
            Waveform::Sum(parts) => {
                for p in parts {
                    p.collect_breakpoints(lo, hi, out);
                }
            }
            _ => {}
        }
    }
}

impl From<Expr> for Waveform {
    fn from(e: Expr) -> Self {
        Waveform::Expression(e)
    }
}

/// A waveform re-triggered every `trep` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggeredSignal {
    waveform: Waveform,
    trep: f64,
    n_passages: Option<u32>,
    lowpass_rise_10_90: Option<f64>,
    // Low-pass output over one period, when configured.
    filtered: Option<Waveform>,
}

impl TriggeredSignal {
    pub fn new(waveform: Waveform, trep: f64) -> Result<Self, WaveformError> {
        if !(trep > 0.0 && trep.is_finite()) {
            return Err(WaveformError::InvalidParameter(format!(
                "repetition time must be positive, got {trep}"
            )));
        }
        Ok(Self {
            waveform,
            trep,
            n_passages: None,
            lowpass_rise_10_90: None,
            filtered: None,
        })
    }

    /// Route every passage through the first-order test-circuit low-pass
    /// with the given 10-90 % rise time.
    pub fn with_lowpass(mut self, rise_10_90: f64) -> Result<Self, WaveformError> {
        self.filtered = Some(apply_circuit_lowpass(&self.waveform, rise_10_90, self.trep)?);
        self.lowpass_rise_10_90 = Some(rise_10_90);
        Ok(self)
    }

    /// Limit the burst to `n` passages; the field is zero afterwards.
    pub fn with_passages(mut self, n: u32) -> Self {
        self.n_passages = Some(n);
        self
    }

    /// Remove any passage limit.
    pub fn free_running(mut self) -> Self {
        self.n_passages = None;
        self
    }

    pub fn waveform(&self) -> &Waveform {
        &self.waveform
    }

    /// The waveform actually emitted in each passage (low-passed if set).
    pub fn emitted(&self) -> &Waveform {
        self.filtered.as_ref().unwrap_or(&self.waveform)
    }

    pub fn trep(&self) -> f64 {
        self.trep
    }

    pub fn n_passages(&self) -> Option<u32> {
        self.n_passages
    }

    pub fn lowpass_rise_10_90(&self) -> Option<f64> {
        self.lowpass_rise_10_90
    }

    fn passage_of(&self, big_t: f64) -> f64 {
        (big_t / self.trep).floor()
    }

    /// Field at global time `big_t` measured from the first trigger.
    ///
    /// Zero before the first trigger and after the last passage.
    pub fn field(&self, big_t: f64) -> Result<f64, EvalError> {
        if big_t < 0.0 {
            return Ok(0.0);
        }
        let n = self.passage_of(big_t);
        if let Some(max) = self.n_passages {
            if n >= max as f64 {
                return Ok(0.0);
            }
        }
        let mut t = big_t - n * self.trep;
        // Guard against rounding just below a trigger boundary.
        if t >= self.trep {
            t -= self.trep;
        }
        self.emitted().eval(t.max(0.0))
    }

    /// Global times in `[lo, hi]` where the emitted field may jump: the
    /// triggers themselves plus the waveform's own breakpoints in every
    /// passage.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if hi < 0.0 || hi < lo {
            return out;
        }
        let first = self.passage_of(lo.max(0.0)).max(0.0) as u64;
        let mut last = self.passage_of(hi) as u64;
        if let Some(max) = self.n_passages {
            last = last.min(max as u64);
        }
        let local = self.emitted().breakpoints(0.0, self.trep);
        for n in first..=last {
            let base = n as f64 * self.trep;
            if base >= lo && base <= hi {
                out.push(base);
            }
            if self.n_passages.is_some_and(|m| n >= m as u64) {
                continue;
            }
            for b in &local {
                let x = base + b;
                if x >= lo && x <= hi {
                    out.push(x);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Peak-to-peak field over one period, sampled on `n` points.
    pub fn peak_to_peak(&self, n: usize) -> Result<f64, EvalError> {
        let n = n.max(2);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let v = self.emitted().eval(self.trep * i as f64 / n as f64)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok(hi - lo)
    }
}

/// Field of `sig` at global time `big_t`.
pub fn eval_field(sig: &TriggeredSignal, big_t: f64) -> Result<f64, EvalError> {
    sig.field(big_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn square_is_periodic() {
        let sig = TriggeredSignal::new(
            Waveform::Square {
                amplitude: 3e-6,
                start: 50e-9,
                width: 270e-9,
            },
            500e-9,
        )
        .unwrap();
        assert_eq!(eval_field(&sig, 600e-9).unwrap(), 3e-6);
        assert_eq!(eval_field(&sig, 400e-9).unwrap(), 0.0);
        assert_eq!(eval_field(&sig, 40e-9).unwrap(), 0.0);
    }

    #[test]
    fn sine_quarter_period() {
        let sig = TriggeredSignal::new(Builtin::Sine4MHz.waveform(), 344e-9).unwrap();
        let b = eval_field(&sig, 62.5e-9).unwrap();
        assert!((b - 10e-6).abs() < 1e-18);
    }

    #[test]
    fn zero_waveform_everywhere() {
        let sig = TriggeredSignal::new(parse_waveform_expr("0").unwrap(), 1e-6).unwrap();
        for i in 0..100 {
            assert_eq!(eval_field(&sig, i as f64 * 37e-9).unwrap(), 0.0);
        }
    }

    #[test]
    fn burst_ends_after_last_passage() {
        let sig = TriggeredSignal::new(Waveform::constant(1e-6), 100e-9)
            .unwrap()
            .with_passages(2);
        assert_eq!(sig.field(-1e-9).unwrap(), 0.0);
        assert_eq!(sig.field(150e-9).unwrap(), 1e-6);
        assert_eq!(sig.field(200e-9).unwrap(), 0.0);
    }

    #[test]
    fn fig4_builtin_matches_caption_formula() {
        let w = Builtin::Fig4.waveform();
        let omega = 2.0 * PI * 1e6;
        for &t in &[0.0, 1.3e-7, 4.1e-7, 7.77e-7] {
            let expected = 81.87e-6
                * (omega * t / 2.0).sin().powi(2)
                * ((12.0 * omega * t).sin() * (omega * t).cos() * (omega * t).sin().powi(2));
            assert!((w.eval(t).unwrap() - expected).abs() <= 1e-12 * 81.87e-6);
        }
    }

    #[test]
    fn builtin_names() {
        for b in [Builtin::Square270, Builtin::Sine4MHz, Builtin::Fig4] {
            assert_eq!(b.name().parse::<Builtin>().unwrap(), b);
        }
        assert!(matches!(
            Waveform::builtin("triangle"),
            Err(WaveformError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn samples_interpolate_and_zero_extend() {
        let s = SampledWaveform::new(1e-9, vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.eval(0.5e-9), 1.0);
        assert_eq!(s.eval(2e-9), 4.0);
        assert_eq!(s.eval(2.5e-9), 0.0);
        assert_eq!(s.eval(-1e-9), 0.0);
    }

    #[test]
    fn sample_file_roundtrip() {
        let text = "dt_ns=0.5\n# comment\n1e-6\n-2.5e-6\n\n3e-6\n";
        let s = SampledWaveform::from_text(text).unwrap();
        assert_eq!(s.values, vec![1e-6, -2.5e-6, 3e-6]);
        assert!((s.dt - 0.5e-9).abs() < 1e-24);
        let again = SampledWaveform::from_text(&s.to_text()).unwrap();
        assert_eq!(again.values, s.values);
    }

    #[test]
    fn sample_file_errors() {
        assert!(matches!(
            SampledWaveform::from_text("1e-6\n"),
            Err(WaveformError::File { line: 1, .. })
        ));
        assert!(matches!(
            SampledWaveform::from_text("dt_ns=1\n1e-6\nabc\n"),
            Err(WaveformError::File { line: 3, .. })
        ));
        assert!(SampledWaveform::from_text("dt_ns=0\n1\n").is_err());
    }

    #[test]
    fn breakpoints_include_triggers_and_edges() {
        let sig = TriggeredSignal::new(
            Waveform::Square {
                amplitude: 1.0,
                start: 10e-9,
                width: 20e-9,
            },
            100e-9,
        )
        .unwrap()
        .with_passages(2);
        let bp = sig.breakpoints(0.0, 1e-6);
        let ns: Vec<i64> = bp.iter().map(|b| (b * 1e9).round() as i64).collect();
        assert_eq!(ns, vec![0, 10, 30, 100, 110, 130, 200]);
    }
}
