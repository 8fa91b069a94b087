//! Recovery of the multi-component test waveform with a realistic shot
//! budget, followed by its power spectrum.
use echoscope::acquisition::{run_sweep, Conversion, SweepConfig};
use echoscope::analysis::{power_spectrum, rms, SpectrumWindow};
use echoscope::sensor::SensorParams;
use echoscope::sequence::Protocol;
use echoscope::sim::{Backend, SimSettings};
use echoscope::waveform::{TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let sig = TriggeredSignal::new(Waveform::builtin("fig4")?, 1400e-9)?;
    let mut cfg = SweepConfig::new(Protocol::DifferentialEcho, 0.0, 1116e-9, 4e-9);
    cfg.tint = 20e-9;
    cfg.k = 4;
    cfg.n_shots = Some(6_428_571);
    cfg.seed = 4;
    cfg.conversion = Conversion::Arcsine;
    let rec = run_sweep(&cfg, &sig, &p, Backend::Filter, &SimSettings::default())?;

    let est = rec.b_est();
    let truth = rec.b_true();
    let err: Vec<f64> = est.iter().zip(&truth).map(|(a, b)| a - b).collect();
    println!("{} points, rms(B_true) {:.2} uT, rms(B_est - B_true) {:.2} uT",
        est.len(), rms(&truth) * 1e6, rms(&err) * 1e6);

    let spec = power_spectrum(&est, cfg.ts, SpectrumWindow::None)?;
    let mut peaks: Vec<(f64, f64)> = spec.freqs.iter().copied().zip(spec.normalized.iter().copied()).collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("strongest spectral lines:");
    for (f, v) in peaks.iter().take(5) {
        println!("  {:6.2} MHz  {:.3}", f * 1e-6, v);
    }
    Ok(())
}
