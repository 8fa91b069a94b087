//! 10-90 % rise time of the swept step for a few integration times.
use echoscope::acquisition::{run_sweep, SweepConfig};
use echoscope::analysis::rise_time_10_90;
use echoscope::sensor::SensorParams;
use echoscope::sequence::Protocol;
use echoscope::sim::{Backend, SimSettings};
use echoscope::waveform::{TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let sig = TriggeredSignal::new(Waveform::builtin("square270")?, 700e-9)?;
    println!("tpi = {:.1} ns", p.tpi() * 1e9);
    for tint in [5e-9, 10e-9, 20e-9, 40e-9] {
        let mut cfg = SweepConfig::new(Protocol::DifferentialEcho, 0.0, 120e-9, 0.5e-9);
        cfg.tint = tint;
        let rec = run_sweep(&cfg, &sig, &p, Backend::Filter, &SimSettings::default())?;
        let r = rise_time_10_90(&rec, p.tpi(), tint)?;
        println!(
            "tint {:4.0} ns: rise {:6.2} ns (max(tpi, tint) = {:4.1} ns)",
            tint * 1e9,
            r.measured * 1e9,
            r.model * 1e9
        );
    }
    Ok(())
}
