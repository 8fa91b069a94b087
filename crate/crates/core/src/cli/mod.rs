//! Command-line front end.
//!
//! Every subcommand reads a TOML scenario, writes its artifacts into the
//! output directory and returns an exit code: 0 on success, 1 on I/O
//! failures, 2 on configuration or validation problems.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::acquisition::{
    estimate_offset, reconstruct_ramsey, run_sweep, with_workers, AcqError, SweepConfig,
    SweepResult,
};
use crate::analysis::{
    baseline_noise_rms, bmin_curve, hann_cdf_rise_fraction, hann_response, inverse_filter,
    power_spectrum, quiet_mask, residual_noise_rms, rise_time_10_90, rms, transfer_function,
    AnalysisError, ImpulseSettings, TfMethod, TransferFunction,
};
use crate::plot::{line_plot, Axes, Series};
use crate::sensor::SensorParams;
use crate::sequence::{has_errors, validate, Diagnostic, Protocol, ValidateOptions};
use crate::sim::{build_modulation, Backend};
use crate::waveform::TriggeredSignal;

pub use config::{
    AnalysisKind, AnalysisOptions, BodeConfig, CompareConfig, ReconstructConfig, ScenarioConfig,
    SensitivityConfig, SignalConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "ECHOSCOPE_OUT";
const DEFAULT_OUT: &str = "echoscope-out";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Config(_) | CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl From<AcqError> for CliError {
    fn from(e: AcqError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "echoscope", version, about = "Equivalent-time waveform sampling with a spin-echo sensor")]
pub struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,
    /// Output directory; falls back to the scenario's `output_dir`, then
    /// $ECHOSCOPE_OUT, then ./echoscope-out.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured sweep and requested analyses.
    Simulate { config: PathBuf },
    /// Transfer function, analytic and simulated.
    Bode { config: PathBuf },
    /// Minimum detectable field against k.
    Sensitivity { config: PathBuf },
    /// Integrative Ramsey against the differential protocol.
    Compare { config: PathBuf },
    /// Ramsey sweep plus smoothing-and-differentiation reconstruction.
    Reconstruct {
        config: PathBuf,
        /// Reconstruct an existing raw sweep CSV instead of simulating.
        #[arg(long)]
        from_csv: Option<PathBuf>,
    },
    /// Check the configured sequences without simulating.
    Validate { config: PathBuf },
}

/// Flags that override scenario values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub backend: Option<Backend>,
    pub out: Option<PathBuf>,
    /// Suppress the list of written files.
    pub quiet: bool,
}

impl From<&Cli> for Overrides {
    fn from(c: &Cli) -> Self {
        Self {
            seed: c.seed,
            jobs: c.jobs,
            backend: c.backend,
            out: c.out.clone(),
            quiet: false,
        }
    }
}

/// Parse nothing further; run `cli` and return the exit code.
pub fn run(cli: Cli) -> i32 {
    let ov = Overrides::from(&cli);
    let result = match &cli.command {
        Command::Simulate { config } => cmd_simulate(config, &ov),
        Command::Bode { config } => cmd_bode(config, &ov),
        Command::Sensitivity { config } => cmd_sensitivity(config, &ov),
        Command::Compare { config } => cmd_compare(config, &ov),
        Command::Reconstruct { config, from_csv } => {
            cmd_reconstruct(config, from_csv.as_deref(), &ov)
        }
        Command::Validate { config } => cmd_validate(config, &ov),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Context {
    cfg: ScenarioConfig,
    base: PathBuf,
    hash: String,
    seed: Option<u64>,
    backend: Backend,
    jobs: Option<usize>,
    out: PathBuf,
    command: &'static str,
    quiet: bool,
}

impl Context {
    fn load(path: &Path, ov: &Overrides, command: &'static str) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg = ScenarioConfig::parse(&text)?;
        cfg.sensor
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        let out = ov
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(Self {
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            hash,
            seed: ov.seed.or(cfg.seed),
            backend: ov.backend.unwrap_or(cfg.backend),
            jobs: ov.jobs.or(cfg.jobs),
            out,
            command,
            quiet: ov.quiet,
            cfg,
        })
    }

    fn sweep(&self) -> Result<SweepConfig, CliError> {
        let mut s = *self.cfg.sweep()?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        Ok(s)
    }

    fn signal(&self) -> Result<TriggeredSignal, CliError> {
        self.cfg.signal(&self.base)
    }

    fn sensor(&self) -> &SensorParams {
        &self.cfg.sensor
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if !self.quiet {
            println!("wrote {}", path.display());
        }
        Ok(path)
    }

    fn sidecar(&self, artifact: &str, metadata: Value) -> Value {
        json!({
            "artifact": artifact,
            "command": self.command,
            "config_sha256": self.hash,
            "seed": self.seed,
            "backend": self.backend.name(),
            "metadata": metadata,
        })
    }

    /// `<stem>.csv` plus its `<stem>.json` sidecar.
    fn write_csv(&self, stem: &str, csv: &str, metadata: Value) -> Result<(), CliError> {
        let name = format!("{stem}.csv");
        self.write(&name, csv)?;
        self.write_json(stem, self.sidecar(&name, metadata))
    }

    fn write_json(&self, stem: &str, v: Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&v).expect("json serialisation");
        self.write(&format!("{stem}.json"), &(text + "\n")).map(|_| ())
    }
}

fn report(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

/// Build and check the first and last sequence of a sweep.
fn preflight(
    sweep: &SweepConfig,
    sig: Option<&TriggeredSignal>,
    p: &SensorParams,
    trep: f64,
) -> Result<Vec<Diagnostic>, CliError> {
    sweep.validate()?;
    let peak_to_peak = match sig {
        Some(s) => Some(
            s.peak_to_peak(4096)
                .map_err(|e| CliError::Validation(e.to_string()))?,
        ),
        None => None,
    };
    let opts = ValidateOptions {
        budget_mode: sweep.budget_mode,
        peak_to_peak,
        ..ValidateOptions::default()
    };
    let mut diags: Vec<Diagnostic> = Vec::new();
    let last = sweep.delay(sweep.n_points() - 1);
    for t in [sweep.t_start, last] {
        let seq = sweep
            .build_sequence(t, trep, p)
            .map_err(|e| CliError::Validation(format!("t = {:.3} ns: {e}", t * 1e9)))?;
        for d in validate(&seq, p, &opts) {
            if !diags.contains(&d) {
                diags.push(d);
            }
        }
    }
    report(&diags);
    if has_errors(&diags) {
        let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(CliError::Validation(msg.join("; ")));
    }
    Ok(diags)
}

fn ns(t: &[f64]) -> Vec<f64> {
    t.iter().map(|v| v * 1e9).collect()
}

fn micro(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * 1e6).collect()
}

fn sweep_plot(title: &str, rec: &SweepResult, offset: f64) -> String {
    let t: Vec<f64> = rec.points.iter().map(|p| p.t + offset).collect();
    let mut series = Vec::new();
    if rec.points.iter().all(|p| p.b_est.is_some()) {
        series.push(Series::new("B_est", ns(&t), micro(&rec.b_est())));
        series.push(Series::new("B_true", ns(&t), micro(&rec.b_true())));
        line_plot(title, "t (ns)", "B (uT)", &series, Axes::default())
    } else {
        series.push(Series::new("p", ns(&t), rec.p_mean()));
        line_plot(title, "t (ns)", "p", &series, Axes::default())
    }
}

fn sweep_offset(sweep: &SweepConfig, trep: f64, p: &SensorParams) -> Result<f64, CliError> {
    let seq = sweep
        .build_sequence(sweep.t_start, trep, p)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(estimate_offset(&seq, p.tpi()))
}

pub fn cmd_simulate(path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let ctx = Context::load(path, ov, "simulate")?;
    let sweep = ctx.sweep()?;
    let sig = ctx.signal()?;
    let p = *ctx.sensor();
    let diags = preflight(&sweep, Some(&sig), &p, sig.trep())?;
    let settings = ctx.cfg.sim;
    let backend = ctx.backend;
    let rec = with_workers(ctx.jobs, || run_sweep(&sweep, &sig, &p, backend, &settings))?;
    let offset = sweep_offset(&sweep, sig.trep(), &p)?;
    let mut meta = rec.metadata.clone();
    meta["preflight"] = json!(diags.iter().map(|d| d.to_string()).collect::<Vec<_>>());
    ctx.write_csv("sweep", &rec.to_csv(), meta)?;
    ctx.write("sweep.svg", &sweep_plot("Sweep", &rec, offset))?;

    let opts = ctx.cfg.analysis_options;
    let est_t: Vec<f64> = rec.points.iter().map(|pt| pt.t + offset).collect();
    for kind in &ctx.cfg.analysis {
        match kind {
            AnalysisKind::RiseTime => {
                let r = rise_time_10_90(&rec, p.tpi(), sweep.tint)?;
                let length = sweep.tint + p.tpi();
                ctx.write_json(
                    "rise_time",
                    ctx.sidecar(
                        "rise_time.json",
                        json!({
                            "measured_s": r.measured,
                            "model_max_tpi_tint_s": r.model,
                            "hann_prediction_s": hann_cdf_rise_fraction() * length,
                            "t10_s": r.t10,
                            "t90_s": r.t90,
                        }),
                    ),
                )?;
            }
            AnalysisKind::Spectrum => {
                let dt = sweep.ts;
                let est = power_spectrum(&rec.b_est(), dt, opts.spectrum_window)?;
                let truth = power_spectrum(&rec.b_true(), dt, opts.spectrum_window)?;
                let mut csv =
                    String::from("f_hz,power_est,power_est_norm,power_true,power_true_norm\n");
                for i in 0..est.freqs.len() {
                    csv.push_str(&format!(
                        "{:e},{:e},{:e},{:e},{:e}\n",
                        est.freqs[i],
                        est.power[i],
                        est.normalized[i],
                        truth.power[i],
                        truth.normalized[i]
                    ));
                }
                ctx.write_csv("spectrum", &csv, json!({ "window": opts.spectrum_window }))?;
                let f_mhz: Vec<f64> = est.freqs.iter().map(|f| f / 1e6).collect();
                ctx.write(
                    "spectrum.svg",
                    &line_plot(
                        "Normalised power spectrum",
                        "f (MHz)",
                        "power",
                        &[
                            Series::new("estimate", f_mhz.clone(), est.normalized.clone()),
                            Series::new("input", f_mhz, truth.normalized.clone()),
                        ],
                        Axes::default(),
                    ),
                )?;
            }
            AnalysisKind::InverseFilter => {
                let n = rec.points.len();
                let nyquist = 0.5 / sweep.ts;
                let freqs: Vec<f64> = (0..=4 * n).map(|i| nyquist * i as f64 / (4 * n) as f64).collect();
                let tf = analytic_tf(&freqs, sweep.tint, &p)?;
                let est = rec.b_est();
                let inv = inverse_filter(&est, sweep.ts, &tf, opts.inverse_lambda)?;
                let truth = rec.b_true();
                let err = |v: &[f64]| {
                    rms(&v.iter().zip(&truth).map(|(a, b)| a - b).collect::<Vec<_>>())
                };
                let mut csv = String::from("t_ns,B_est_T,B_inv_T,B_true_T\n");
                for i in 0..n {
                    csv.push_str(&format!(
                        "{:.6},{:e},{:e},{:e}\n",
                        est_t[i] * 1e9,
                        est[i],
                        inv[i],
                        truth[i]
                    ));
                }
                ctx.write_csv(
                    "inverse_filter",
                    &csv,
                    json!({
                        "lambda": opts.inverse_lambda,
                        "rms_error_before_t": err(&est),
                        "rms_error_after_t": err(&inv),
                        "time_axis": "window centroid",
                    }),
                )?;
            }
            AnalysisKind::BaselineNoise => {
                let peak = rec.b_true().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let half = 0.5 * (sweep.tint + p.tpi()) + 4e-9;
                let mask = quiet_mask(&est_t, sig.emitted(), half, opts.quiet_threshold * peak, 0.5e-9)?;
                let quiet = mask.iter().filter(|&&m| m).count();
                let baseline = baseline_noise_rms(&rec.b_est(), &mask).ok();
                let residual = if sweep.n_shots.is_some() {
                    let clean = SweepConfig {
                        n_shots: None,
                        ..sweep
                    };
                    let reference =
                        with_workers(ctx.jobs, || run_sweep(&clean, &sig, &p, backend, &settings))?;
                    let all = vec![true; rec.points.len()];
                    residual_noise_rms(&rec.b_est(), &reference.b_est(), &all).ok()
                } else {
                    Some(0.0)
                };
                ctx.write_json(
                    "baseline_noise",
                    ctx.sidecar(
                        "baseline_noise.json",
                        json!({
                            "quiet_points": quiet,
                            "baseline_rms_t": baseline,
                            "residual_rms_t": residual,
                            "residual_reference": "same sweep with a noiseless readout",
                        }),
                    ),
                )?;
            }
            AnalysisKind::Modulation => {
                let seq = sweep
                    .build_sequence(sweep.t_start, sig.trep(), &p)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                let m = build_modulation(&seq);
                ctx.write_csv(
                    "modulation",
                    &m.to_csv(opts.modulation_step_s),
                    json!({ "t_s": sweep.t_start, "pulses": seq.dump() }),
                )?;
            }
        }
    }
    Ok(())
}

fn analytic_tf(freqs: &[f64], tint: f64, p: &SensorParams) -> Result<TransferFunction, CliError> {
    Ok(transfer_function(
        freqs,
        tint,
        p,
        TfMethod::AnalyticHann,
        &ImpulseSettings::default(),
        &Default::default(),
    )?)
}

pub fn cmd_bode(path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let ctx = Context::load(path, ov, "bode")?;
    let b = ctx.cfg.bode;
    let p = *ctx.sensor();
    let tint = b
        .tint_s
        .or(ctx.cfg.sweep.map(|s| s.tint))
        .unwrap_or(20e-9);
    let trep = b.trep_s.or(ctx.cfg.trep()).unwrap_or(344e-9);
    if !(b.f_step_hz > 0.0 && b.f_max_hz > 0.0) {
        return Err(CliError::Validation("frequency grid must be positive".into()));
    }
    let n = (b.f_max_hz / b.f_step_hz + 1e-9).floor() as usize;
    let freqs: Vec<f64> = (0..=n).map(|i| i as f64 * b.f_step_hz).collect();
    let imp = ImpulseSettings {
        fwhm: b.impulse_fwhm_s,
        step: b.impulse_step_s,
        backend: ctx.backend,
        trep,
    };
    let settings = ctx.cfg.sim;
    let sim = with_workers(ctx.jobs, || {
        transfer_function(&freqs, tint, &p, TfMethod::SimImpulse, &imp, &settings)
    })?;
    let model_3db = sim.model_minus_3db();
    let flagged = model_3db.map(|f| {
        let i = ((f / b.f_step_hz).round() as usize).min(n);
        json!({ "row": i, "f_hz": freqs[i] })
    });
    ctx.write_csv(
        "bode",
        &sim.to_bode_csv(),
        json!({
            "tint_s": tint,
            "tpi_s": p.tpi(),
            "window_length_s": sim.window_length,
            "impulse": imp,
            "sim_minus_3db_hz": sim.minus_3db(),
            "model_minus_3db_hz": model_3db,
            "model_minus_3db_row": flagged,
            "mag": "simulated impulse response",
            "model_mag": "Hann window of length tint + tpi",
        }),
    )?;
    let f_mhz: Vec<f64> = freqs.iter().map(|f| f / 1e6).collect();
    let db = |v: &[f64]| v.iter().map(|m| 20.0 * m.log10()).collect::<Vec<_>>();
    ctx.write(
        "bode.svg",
        &line_plot(
            "Transfer function",
            "f (MHz)",
            "|G| (dB)",
            &[
                Series::new("simulated", f_mhz.clone(), db(&sim.magnitude)),
                Series::new("Hann model", f_mhz, db(&sim.model_reference)),
            ],
            Axes::default(),
        ),
    )?;
    Ok(())
}

pub fn cmd_sensitivity(path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let ctx = Context::load(path, ov, "sensitivity")?;
    let s = ctx.cfg.sensitivity;
    if s.k_min < 1 || s.k_max < s.k_min {
        return Err(CliError::Validation(format!(
            "k range must satisfy 1 <= k_min <= k_max, got [{}, {}]",
            s.k_min, s.k_max
        )));
    }
    if !(s.tint_s > 0.0) {
        return Err(CliError::Validation("tint_s must be positive".into()));
    }
    let tw = s.tw_s.or(ctx.cfg.trep()).unwrap_or(344e-9);
    let ks: Vec<u64> = (s.k_min as u64..=s.k_max as u64).collect();
    let p = *ctx.sensor();
    let curve = bmin_curve(&p, s.tint_s, tw, &ks);
    let min = curve.minimum();
    ctx.write_csv(
        "sensitivity",
        &curve.to_csv(),
        json!({
            "tint_s": s.tint_s,
            "tw_s": tw,
            "sensor": p,
            "minimum": min.map(|(k, b)| json!({ "k": k, "bmin_t_per_sqrthz": b })),
        }),
    )?;
    let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    ctx.write(
        "sensitivity.svg",
        &line_plot(
            "Minimum detectable field",
            "k",
            "Bmin (T/sqrt(Hz))",
            &[
                Series::new("Bmin", kx.clone(), curve.bmin.clone()),
                Series::new("1/k branch", kx.clone(), curve.branch_k1.clone()),
                Series::new("k^-1/2 branch", kx.clone(), curve.branch_khalf.clone()),
                Series::new("decoherence branch", kx, curve.branch_decoh.clone()),
            ],
            Axes {
                log_x: true,
                log_y: true,
            },
        ),
    )?;
    if let (Some((k, b)), false) = (min, ctx.quiet) {
        println!("minimum Bmin = {:.4e} T/sqrt(Hz) at k = {k}", b);
    }
    Ok(())
}

fn ramsey_config(sweep: &SweepConfig, c: &CompareConfig) -> SweepConfig {
    SweepConfig {
        protocol: Protocol::IntegrativeRamsey,
        ts: c.ramsey_ts_s.unwrap_or(sweep.ts),
        t_stop: c.ramsey_t_stop_s.unwrap_or(sweep.t_stop),
        readout_phase: None,
        ..*sweep
    }
}

/// Baseline RMS of `rec` over points whose estimate neighbourhood sees no
/// field, with the number of such points. The RMS is `None` when too few
/// points are quiet.
fn baseline_of(
    rec: &SweepResult,
    offset: f64,
    half: f64,
    sig: &TriggeredSignal,
) -> Result<(Option<f64>, usize), CliError> {
    let t: Vec<f64> = rec.points.iter().map(|p| p.t + offset).collect();
    let mask = quiet_mask(&t, sig.emitted(), half, 0.0, 0.5e-9)?;
    let n = mask.iter().filter(|&&m| m).count();
    match baseline_noise_rms(&rec.b_est(), &mask) {
        Ok(v) => Ok((Some(v), n)),
        Err(AnalysisError::TooFewPoints { needed, got }) => {
            eprintln!("warning: only {got} quiet points (need {needed}); baseline not reported");
            Ok((None, n))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_compare(path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let ctx = Context::load(path, ov, "compare")?;
    let c = ctx.cfg.compare.clone();
    let sweep = ctx.sweep()?;
    let sig = ctx.signal()?;
    let p = *ctx.sensor();
    let settings = ctx.cfg.sim;
    let backend = ctx.backend;
    let mut summary = json!({ "n_shots": sweep.n_shots, "seed": sweep.seed });

    let mut diff_rms = None;
    if c.protocols.contains(&Protocol::DifferentialEcho) {
        let d = SweepConfig {
            protocol: Protocol::DifferentialEcho,
            ..sweep
        };
        preflight(&d, Some(&sig), &p, sig.trep())?;
        let rec = with_workers(ctx.jobs, || run_sweep(&d, &sig, &p, backend, &settings))?;
        let offset = sweep_offset(&d, sig.trep(), &p)?;
        ctx.write_csv("differential", &rec.to_csv(), rec.metadata.clone())?;
        ctx.write("differential.svg", &sweep_plot("Differential", &rec, offset))?;
        let half = 0.5 * (d.tint + p.tpi()) + c.quiet_margin_s;
        let (rms, n) = baseline_of(&rec, offset, half, &sig)?;
        summary["differential_baseline_rms_t"] = json!(rms);
        summary["differential_baseline_points"] = json!(n);
        diff_rms = rms;
    }
    let mut ramsey_rms = None;
    if c.protocols.contains(&Protocol::IntegrativeRamsey) {
        let r = ramsey_config(&sweep, &c);
        preflight(&r, Some(&sig), &p, sig.trep())?;
        let raw = with_workers(ctx.jobs, || run_sweep(&r, &sig, &p, backend, &settings))?;
        let rec = reconstruct_ramsey(&raw, c.window, &p)?;
        ctx.write_csv("ramsey_raw", &raw.to_csv(), raw.metadata.clone())?;
        ctx.write_csv("ramsey_reconstructed", &rec.to_csv(), rec.metadata.clone())?;
        ctx.write("ramsey_reconstructed.svg", &sweep_plot("Ramsey reconstruction", &rec, 0.0))?;
        let half = 0.5 * (c.window as f64 + 1.0) * r.ts + c.quiet_margin_s;
        let (rms, n) = baseline_of(&rec, 0.0, half, &sig)?;
        summary["ramsey_baseline_rms_t"] = json!(rms);
        summary["ramsey_baseline_points"] = json!(n);
        summary["ramsey_window"] = json!(c.window);
        ramsey_rms = rms;
    }
    if let (Some(r), Some(d)) = (ramsey_rms, diff_rms) {
        let ratio = r / d;
        summary["noise_ratio"] = json!(ratio);
        if !ctx.quiet {
            println!("baseline noise ratio (Ramsey / differential) = {ratio:.3}");
        }
    }
    ctx.write_json("compare", ctx.sidecar("compare.json", summary))
}

pub fn cmd_reconstruct(path: &Path, from_csv: Option<&Path>, ov: &Overrides) -> Result<(), CliError> {
    let ctx = Context::load(path, ov, "reconstruct")?;
    let p = *ctx.sensor();
    let window = ctx.cfg.reconstruct.window;
    let raw = match from_csv {
        Some(f) => {
            let text = fs::read_to_string(f)
                .map_err(|e| CliError::Io(format!("{}: {e}", f.display())))?;
            SweepResult::from_csv(&text)?
        }
        None => {
            let sweep = ctx.sweep()?;
            if sweep.protocol != Protocol::IntegrativeRamsey {
                return Err(CliError::Validation(format!(
                    "reconstruct needs protocol = \"integrative_ramsey\", got {}",
                    sweep.protocol
                )));
            }
            let sig = ctx.signal()?;
            preflight(&sweep, Some(&sig), &p, sig.trep())?;
            let settings = ctx.cfg.sim;
            let backend = ctx.backend;
            let raw = with_workers(ctx.jobs, || run_sweep(&sweep, &sig, &p, backend, &settings))?;
            ctx.write_csv("ramsey_raw", &raw.to_csv(), raw.metadata.clone())?;
            raw
        }
    };
    let rec = reconstruct_ramsey(&raw, window, &p)?;
    ctx.write_csv("ramsey_reconstructed", &rec.to_csv(), rec.metadata.clone())?;
    ctx.write("ramsey_reconstructed.svg", &sweep_plot("Ramsey reconstruction", &rec, 0.0))?;
    Ok(())
}

pub fn cmd_validate(path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let ctx = Context::load(path, ov, "validate")?;
    let sweep = ctx.sweep()?;
    let p = *ctx.sensor();
    let sig = match &ctx.cfg.signal {
        Some(_) => Some(ctx.signal()?),
        None => None,
    };
    let trep = sig.as_ref().map(|s| s.trep()).unwrap_or(f64::INFINITY);
    let seq = sweep
        .build_sequence(sweep.t_start, trep, &p)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    print!("{}", seq.dump());
    let diags = preflight(&sweep, sig.as_ref(), &p, trep)?;
    println!(
        "ok: {} points, sensing span {:.3} us, {} warning(s)",
        sweep.n_points(),
        seq.sensing_span() * 1e6,
        diags.len()
    );
    Ok(())
}

/// Signed Hann response, re-exported for scripts that build their own
/// inverse filters.
pub fn hann_filter_response(f: f64, length: f64) -> f64 {
    hann_response(f, length)
}
