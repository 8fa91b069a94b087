//! Equivalent-time sweep of the square test waveform with the differential
//! echo protocol, noiseless and with shot noise.
use echoscope::acquisition::{run_sweep, SweepConfig};
use echoscope::sensor::SensorParams;
use echoscope::sequence::Protocol;
use echoscope::sim::{Backend, SimSettings};
use echoscope::waveform::{TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let sig = TriggeredSignal::new(Waveform::builtin("square270")?, 700e-9)?;
    let mut cfg = SweepConfig::new(Protocol::DifferentialEcho, 0.0, 600e-9, 20e-9);
    cfg.tint = 20e-9;
    cfg.k = 2;
    let clean = run_sweep(&cfg, &sig, &p, Backend::Filter, &SimSettings::default())?;
    cfg.n_shots = Some(1_000_000);
    cfg.seed = 7;
    let noisy = run_sweep(&cfg, &sig, &p, Backend::Filter, &SimSettings::default())?;

    println!("{:>6} {:>10} {:>10} {:>10}", "t_ns", "B_true_uT", "clean_uT", "noisy_uT");
    for (a, b) in clean.points.iter().zip(&noisy.points) {
        println!(
            "{:6.0} {:10.3} {:10.3} {:10.3}",
            a.t * 1e9,
            a.b_true * 1e6,
            a.b_est.unwrap_or(f64::NAN) * 1e6,
            b.b_est.unwrap_or(f64::NAN) * 1e6
        );
    }
    Ok(())
}
