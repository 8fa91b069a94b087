//! Peak population change grows linearly with the number of echo blocks.
use echoscope::acquisition::SweepConfig;
use echoscope::analysis::{fit_through_origin, peak_signal_vs_k};
use echoscope::sensor::SensorParams;
use echoscope::sequence::Protocol;
use echoscope::sim::{Backend, SimSettings};
use echoscope::waveform::{TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let sig = TriggeredSignal::new(Waveform::builtin("sine4MHz")?, 344e-9)?;
    let mut base = SweepConfig::new(Protocol::DifferentialEcho, 0.0, 300e-9, 4e-9);
    base.tint = 20e-9;
    let ks: Vec<u32> = (1..=8).collect();
    let peaks = peak_signal_vs_k(&base, &sig, &p, Backend::Filter, &SimSettings::default(), &ks)?;
    for s in &peaks {
        println!("k {:2}: dp_max {:.4}  dphi (corrected) {:.4} rad", s.k, s.dp_max, s.dphi_max_corrected);
    }
    let x: Vec<f64> = peaks.iter().map(|s| s.k as f64).collect();
    let y: Vec<f64> = peaks.iter().map(|s| s.dphi_max_corrected).collect();
    let fit = fit_through_origin(&x, &y);
    println!("dphi = {:.5} * k  (R^2 = {:.5})", fit.slope, fit.r2);
    Ok(())
}
