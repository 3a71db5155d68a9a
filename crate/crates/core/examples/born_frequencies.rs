//! Monte-Carlo record frequencies against the |alpha|^2 weights.

use bornlab::amplitude::Configuration;
use bornlab::process::{born_frequency_test, ProcessSchedule};

fn main() -> bornlab::Result<()> {
    let schedule = ProcessSchedule::builder(Configuration::from_squared_magnitudes(&[0.3, 0.7], None)?)
        .record_standard("r")
        .build()?;
    let report = born_frequency_test(&schedule, 2.0, 100_000, 7)?;
    for (key, count) in &report.counts {
        println!("{key}: {count} observed, {:.0} expected", report.expected[key] * report.trials as f64);
    }
    println!("chi-square {:.3} on {} dof, p-value {:.4}", report.chi_square, report.degrees_of_freedom, report.p_value);
    Ok(())
}
