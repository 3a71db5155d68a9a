//! Total weight under Haar unitaries is conserved only for p = 2.

use bornlab::amplitude::{Configuration, Unitary};
use bornlab::process::{total_weight_drift, weight_drift};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bornlab::Result<()> {
    for p in [1.0, 1.5, 2.0, 3.0, 4.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        println!("p={p}: max drift over 100 unitaries {:.3e}", total_weight_drift(3, p, 100, &mut rng)?);
    }
    let e0 = Configuration::basis_state(2, 0)?;
    println!("hadamard on (1, 0) at p=4: {}", weight_drift(&Unitary::hadamard(), &e0, 4.0)?);
    Ok(())
}
