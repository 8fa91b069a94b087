//! Two-quadrature readout extends the usable phase range past the
//! small-angle limit of a single readout.
use echoscope::acquisition::{phase_cycled_readout, SweepConfig};
use echoscope::sensor::SensorParams;
use echoscope::sequence::Protocol;
use echoscope::sim::{Backend, SimSettings};
use echoscope::waveform::{TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let sig = TriggeredSignal::new(Waveform::builtin("sine4MHz")?, 344e-9)?;
    let mut cfg = SweepConfig::new(Protocol::DifferentialEcho, 0.0, 300e-9, 12e-9);
    cfg.tint = 20e-9;
    cfg.k = 24;
    let c = phase_cycled_readout(&cfg, &sig, &p, Backend::Filter, &SimSettings::default())?;
    println!("{:>6} {:>9} {:>9} {:>9}", "t_ns", "linear", "cycled", "B_uT");
    for (q, pt) in c.quadratures.iter().zip(&c.result.points) {
        println!(
            "{:6.0} {:9.3} {:9.3} {:9.3}",
            q.t * 1e9,
            q.phase_linear,
            q.phase_cycled,
            pt.b_est.unwrap_or(f64::NAN) * 1e6
        );
    }
    Ok(())
}
