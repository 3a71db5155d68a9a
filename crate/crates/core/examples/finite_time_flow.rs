//! Integrating generators: null-space generators preserve the norm for all t,
//! a rotation generator does not when p = 4.

use bornlab::isometry::{
    analyze_generators, min_samples, sample_vectors, verify_generator_finite_time, GeneratorConstraintSystem,
    DEFAULT_RANK_TOLERANCE, DEFAULT_SAMPLE_FLOOR,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bornlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid: Vec<f64> = (0..20).map(|k| -1.0 + 2.0 * k as f64 / 19.0).collect();
    let xs = sample_vectors(3, 50, DEFAULT_SAMPLE_FLOOR, &mut rng)?;

    let system = GeneratorConstraintSystem::build(3, 4.0, min_samples(3), &mut rng)?;
    let analysis = analyze_generators(&system, DEFAULT_RANK_TOLERANCE)?;
    for (k, g) in analysis.generators.iter().enumerate() {
        println!("generator {k}: max deviation {:.1e}", verify_generator_finite_time(g, 4.0, &grid, &xs)?);
    }

    let mut rotation = DMatrix::<Complex64>::zeros(3, 3);
    rotation[(0, 1)] = Complex64::new(1.0, 0.0);
    rotation[(1, 0)] = Complex64::new(-1.0, 0.0);
    println!("rotation: max deviation {:.3}", verify_generator_finite_time(&rotation, 4.0, &grid, &xs)?);
    Ok(())
}
