//! Parse a waveform expression, repeat it on a trigger and pass a square
//! pulse through the test-circuit low-pass.
use echoscope::waveform::{parse_waveform_expr, TriggeredSignal, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = parse_waveform_expr("10e-6 * exp(-((t - 200e-9) / 50e-9)^2) * sin(2*pi*20e6*t)")?;
    let sig = TriggeredSignal::new(w, 500e-9)?;
    println!("T_ns,B_uT");
    for i in (0..1500).step_by(50) {
        let big_t = i as f64 * 1e-9;
        println!("{i},{:.4}", sig.field(big_t)? * 1e6);
    }

    let square = TriggeredSignal::new(Waveform::builtin("square270")?, 700e-9)?.with_lowpass(8e-9)?;
    println!("\nlow-passed square edge:");
    for t_ns in [40.0, 50.0, 52.0, 54.0, 58.0, 66.0, 80.0] {
        println!("  t = {t_ns:>4} ns  B = {:8.3} uT", square.field(t_ns * 1e-9)? * 1e6);
    }
    println!("peak-to-peak: {:.1} uT", square.peak_to_peak(4096)? * 1e6);
    Ok(())
}
