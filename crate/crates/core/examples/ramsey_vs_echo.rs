//! Integrative Ramsey with numerical differentiation against the
//! differential echo, at the same shot count per point.
use echoscope::acquisition::{reconstruct_ramsey, run_sweep, SweepConfig};
use echoscope::analysis::rms;
use echoscope::sensor::SensorParams;
use echoscope::sequence::Protocol;
use echoscope::sim::{Backend, SimSettings};
use echoscope::waveform::{TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let s = SimSettings::default();
    let sig = TriggeredSignal::new(Waveform::zero(), 700e-9)?;

    let mut ramsey = SweepConfig::new(Protocol::IntegrativeRamsey, 0.0, 600e-9, 8e-9);
    ramsey.n_shots = Some(1_000_000);
    ramsey.seed = 1;
    let raw = run_sweep(&ramsey, &sig, &p, Backend::Filter, &s)?;
    let rec = reconstruct_ramsey(&raw, 4, &p)?;

    let mut echo = SweepConfig::new(Protocol::DifferentialEcho, 0.0, 600e-9, 4e-9);
    echo.tint = 20e-9;
    echo.k = 2;
    echo.n_shots = Some(1_000_000);
    echo.seed = 1;
    let diff = run_sweep(&echo, &sig, &p, Backend::Filter, &s)?;

    let r = rms(&rec.b_est());
    let d = rms(&diff.b_est());
    println!("zero-field noise floor:");
    println!("  Ramsey (reconstructed): {:.2} uT", r * 1e6);
    println!("  differential echo:      {:.2} uT", d * 1e6);
    println!("  ratio:                  {:.2}", r / d);
    Ok(())
}
