//! Deconvolve the window response from a swept record of a short burst.
use echoscope::acquisition::{run_sweep, SweepConfig};
use echoscope::analysis::{inverse_filter, rms, transfer_function, ImpulseSettings, TfMethod};
use echoscope::sensor::SensorParams;
use echoscope::sequence::Protocol;
use echoscope::sim::{Backend, SimSettings};
use echoscope::waveform::{parse_waveform_expr, TriggeredSignal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let s = SimSettings::default();
    let w = parse_waveform_expr("20e-6 * exp(-((t - 250e-9) / 50e-9)^2) * sin(2*pi*25e6*t)")?;
    let trep = 600e-9;
    let sig = TriggeredSignal::new(w, trep)?;
    let ts = 2e-9;
    let mut cfg = SweepConfig::new(Protocol::DifferentialEcho, 0.0, 556e-9, ts);
    cfg.tint = 20e-9;
    let rec = run_sweep(&cfg, &sig, &p, Backend::Filter, &s)?;

    let n = rec.points.len();
    let freqs: Vec<f64> = (0..=n / 2).map(|k| k as f64 / (n as f64 * ts)).collect();
    let tf = transfer_function(&freqs, cfg.tint, &p, TfMethod::AnalyticHann, &ImpulseSettings::default(), &s)?;
    let est = rec.b_est();
    let inv = inverse_filter(&est, ts, &tf, 1e-3)?;
    let truth = rec.b_true();
    let err = |v: &[f64]| rms(&v.iter().zip(&truth).map(|(a, b)| a - b).collect::<Vec<_>>());
    println!("rms error before deconvolution: {:.3} uT", err(&est) * 1e6);
    println!("rms error after deconvolution:  {:.3} uT", err(&inv) * 1e6);
    Ok(())
}
