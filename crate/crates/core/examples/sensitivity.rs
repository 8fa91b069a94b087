//! Minimum detectable field against the number of echo blocks.
use echoscope::analysis::{bmin_curve, loglog_slope};
use echoscope::sensor::SensorParams;

fn main() {
    let p = SensorParams::default();
    let ks: Vec<u64> = (1..=64).collect();
    let c = bmin_curve(&p, 20e-9, 344e-9, &ks);
    for i in [0, 1, 3, 7, 11, 12, 15, 31, 63] {
        println!("k {:2}: Bmin {:7.3} uT/sqrt(Hz)", c.k[i], c.bmin[i] * 1e6);
    }
    if let Some((k, b)) = c.minimum() {
        println!("minimum {:.4} uT/sqrt(Hz) at k = {k}", b * 1e6);
    }
    let x: Vec<f64> = c.k[..4].iter().map(|&k| k as f64).collect();
    println!("local slope k=1..4: {:.3}", loglog_slope(&x, &c.bmin[..4]));
}
