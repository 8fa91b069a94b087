//! Timing and physical checks on pulse sequences.
use echoscope::sensor::SensorParams;
use echoscope::sequence::{build_differential_echo, has_errors, validate, BudgetMode, ValidateOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SensorParams::default();
    println!("amplitude limit {:.3} mT, tpi {:.1} ns", p.amplitude_limit() * 1e3, p.tpi() * 1e9);

    let seq = build_differential_echo(100e-9, 20e-9, 2, 700e-9, &p)?;
    print!("{}", seq.dump());
    let opts = ValidateOptions { peak_to_peak: Some(5e-3), ..Default::default() };
    for d in validate(&seq, &p, &opts) {
        println!("{d}");
    }

    let long = build_differential_echo(100e-9, 20e-9, 16, 700e-9, &p)?;
    let hard = ValidateOptions { budget_mode: BudgetMode::Hard, ..Default::default() };
    let diags = validate(&long, &p, &hard);
    for d in &diags {
        println!("{d}");
    }
    println!("k = 16 rejected: {}", has_errors(&diags));

    match build_differential_echo(690e-9, 20e-9, 1, 700e-9, &p) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
