//! Power laws solve f(xy) = f(x) f(y) but not f(x + y) = f(x) f(y).

use bornlab::cauchy::{check_additive_equation_real, check_multiplicative_equation, fit_power_exponent, log_uniform_pairs};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bornlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs = log_uniform_pairs(10_000, 0.1, 10.0, &mut rng);
    for p in [0.5, 2.0, 3.0] {
        let f = |x: f64| x.powf(p);
        let mult = check_multiplicative_equation(f, &pairs)?;
        let add = check_additive_equation_real(f, &pairs)?;
        let samples: Vec<(f64, f64)> = pairs.iter().map(|&(x, _)| (x, f(x))).collect();
        let fit = fit_power_exponent(&samples)?;
        println!(
            "p={p}: multiplicative {:.1e}, additive {:.3}, fitted exponent {:.10}",
            mult.max_residual, add.max_residual, fit.p_hat
        );
    }
    Ok(())
}
