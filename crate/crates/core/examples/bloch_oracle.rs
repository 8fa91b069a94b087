//! The filter path against a direct two-level Bloch integration.
use echoscope::sensor::SensorParams;
use echoscope::sequence::build_differential_echo;
use echoscope::sim::{bloch_evolve, phase_filter, SimSettings};
use echoscope::waveform::{TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let sig = TriggeredSignal::new(Waveform::builtin("sine4MHz")?, 344e-9)?;
    println!("{:>5} {:>12} {:>12} {:>10}", "t_ns", "filter_rad", "bloch_rad", "drift");
    for t_ns in (0..=300).step_by(30) {
        let seq = build_differential_echo(t_ns as f64 * 1e-9, 20e-9, 2, 344e-9, &p)?;
        let f = phase_filter(&seq, &sig, &p, &SimSettings::default())?;
        let b = bloch_evolve(&seq, &sig, &p, p.tpi() / 50.0)?;
        println!("{t_ns:5} {f:12.6} {:12.6} {:10.1e}", b.phase, b.max_norm_drift);
    }
    Ok(())
}
