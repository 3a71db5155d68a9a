//! Sequential records compose multiplicatively for any exponent. That alone
//! does not single out p = 2.

use bornlab::amplitude::{Configuration, Unitary};
use bornlab::process::{enumerate_paths, refinement_consistency, ProcessSchedule};

fn main() -> bornlab::Result<()> {
    let schedule = ProcessSchedule::builder(Configuration::from_squared_magnitudes(&[0.3, 0.7], Some(&[0.0, 1.0]))?)
        .evolve(Unitary::hadamard())
        .record_standard("r1")
        .evolve(Unitary::hadamard())
        .record_standard("r2")
        .build()?;
    for p in [1.0, 2.0, 4.0] {
        let paths = enumerate_paths(&schedule, p)?;
        let listing: Vec<String> = paths
            .iter()
            .map(|(path, w)| format!("{} {w:.4}", schedule.outcome_key(path)))
            .collect();
        println!("p={p}: {} | mismatch {:.1e}", listing.join(", "), refinement_consistency(&schedule, p)?);
    }
    Ok(())
}
