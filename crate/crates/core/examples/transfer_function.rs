//! Transfer function of the differential protocol, simulated from an
//! impulse and compared with the Hann window model.
use echoscope::analysis::{transfer_function, ImpulseSettings, TfMethod};
use echoscope::sensor::SensorParams;
use echoscope::sim::SimSettings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    let freqs: Vec<f64> = (0..=60).map(|i| i as f64 * 1e6).collect();
    let tf = transfer_function(
        &freqs,
        20e-9,
        &p,
        TfMethod::SimImpulse,
        &ImpulseSettings::default(),
        &SimSettings::default(),
    )?;
    println!("{:>6} {:>8} {:>8}", "f_MHz", "sim", "model");
    for i in (0..freqs.len()).step_by(5) {
        println!("{:6.0} {:8.4} {:8.4}", freqs[i] * 1e-6, tf.magnitude[i], tf.model_reference[i]);
    }
    let f3 = |v: Option<f64>| v.map_or("n/a".to_string(), |f| format!("{:.2} MHz", f * 1e-6));
    println!("window length {:.1} ns", tf.window_length * 1e9);
    println!("-3 dB: sim {}, model {}", f3(tf.minus_3db()), f3(tf.model_minus_3db()));
    Ok(())
}
