//! Dimension of the space of p-norm isometry generators. Only p = 2 gives the
//! full n^2 unitary algebra; every other p leaves the n diagonal phases.

use bornlab::isometry::{estimate_generator_dimension, min_samples, GeneratorConstraintSystem, DEFAULT_RANK_TOLERANCE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bornlab::Result<()> {
    for n in [2, 3, 4] {
        for p in [1.0, 1.5, 2.0, 3.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let system = GeneratorConstraintSystem::build(n, p, min_samples(n), &mut rng)?;
            let scan = estimate_generator_dimension(&system, DEFAULT_RANK_TOLERANCE)?;
            println!("n={n} p={p}: dimension {:2}, rank gap {:.1e}", scan.estimated_dimension, scan.rank_gap);
        }
    }
    Ok(())
}
