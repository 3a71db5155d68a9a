//! Residual checks for the two functional equations a weight map may be
//! asked to satisfy, plus log-log exponent fitting.
//!
//! * additive argument: `f(a + b) = f(a) f(b)` (continuous solutions are
//!   exponentials `e^{λa}`)
//! * multiplicative argument: `f(xy) = f(x) f(y)` on `x, y > 0` (continuous
//!   non-negative solutions are power laws `x^p`)
//!
//! Per-pair residuals are relative with an absolute floor of one in the
//! denominator: `|f(a∘b) − f(a)f(b)| / max(1, |f(a∘b)|)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<T> {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub num_samples: usize,
    /// Every sample pair whose residual equals `max_residual`.
    pub worst_case_inputs: Vec<(T, T)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub p_hat: f64,
    pub residual_rms: f64,
    /// `(min x, max x)` over the fitted samples.
    pub sample_range: (f64, f64),
}

fn relative_residual(combined: Complex64, product: Complex64) -> f64 {
    (combined - product).norm() / combined.norm().max(1.0)
}

fn aggregate<T: Copy>(samples: &[(T, T)], residuals: Vec<f64>) -> ResidualReport<T> {
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let mean_residual = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let worst_case_inputs = samples
        .iter()
        .zip(&residuals)
        .filter(|(_, &r)| r == max_residual)
        .map(|(&s, _)| s)
        .collect();
    ResidualReport {
        max_residual,
        // Summation roundoff can push the mean a hair above an all-equal max.
        mean_residual: mean_residual.min(max_residual),
        num_samples: residuals.len(),
        worst_case_inputs,
    }
}

fn finite(z: Complex64, what: &str, at: impl std::fmt::Display) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(format!("{what} at {at}")))
    }
}

/// Residuals of `f(a + b) = f(a) f(b)` over complex sample pairs.
pub fn check_additive_equation<F>(f: F, samples: &[(Complex64, Complex64)]) -> Result<ResidualReport<Complex64>>
where
    F: Fn(Complex64) -> Complex64,
{
    if samples.is_empty() {
        return Err(Error::InvalidSamples("no sample pairs".into()));
    }
    let mut residuals = Vec::with_capacity(samples.len());
    for &(a, b) in samples {
        let fa = finite(f(a), "f(a)", a)?;
        let fb = finite(f(b), "f(b)", b)?;
        let fab = finite(f(a + b), "f(a+b)", a + b)?;
        residuals.push(relative_residual(fab, fa * fb));
    }
    Ok(aggregate(samples, residuals))
}

/// Real-line form of [`check_additive_equation`].
pub fn check_additive_equation_real<F>(f: F, samples: &[(f64, f64)]) -> Result<ResidualReport<f64>>
where
    F: Fn(f64) -> f64,
{
    let lifted: Vec<(Complex64, Complex64)> = samples
        .iter()
        .map(|&(a, b)| (Complex64::new(a, 0.0), Complex64::new(b, 0.0)))
        .collect();
    let report = check_additive_equation(|z| Complex64::new(f(z.re), 0.0), &lifted)?;
    Ok(ResidualReport {
        max_residual: report.max_residual,
        mean_residual: report.mean_residual,
        num_samples: report.num_samples,
        worst_case_inputs: report.worst_case_inputs.iter().map(|(a, b)| (a.re, b.re)).collect(),
    })
}

/// Residuals of `f(x y) = f(x) f(y)` over strictly positive sample pairs.
pub fn check_multiplicative_equation<F>(f: F, samples: &[(f64, f64)]) -> Result<ResidualReport<f64>>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::InvalidSamples("no sample pairs".into()));
    }
    let mut residuals = Vec::with_capacity(samples.len());
    for &(x, y) in samples {
        if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidSamples(format!("sample ({x}, {y}) is not strictly positive")));
        }
        let fx = finite(Complex64::new(f(x), 0.0), "f(x)", x)?;
        let fy = finite(Complex64::new(f(y), 0.0), "f(y)", y)?;
        let fxy = finite(Complex64::new(f(x * y), 0.0), "f(xy)", x * y)?;
        residuals.push(relative_residual(fxy, fx * fy));
    }
    Ok(aggregate(samples, residuals))
}

/// Least-squares slope of `ln f(x)` against `ln x`.
pub fn fit_power_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 2 {
        return Err(Error::InvalidSamples(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let mut logs = Vec::with_capacity(samples.len());
    for &(x, fx) in samples {
        if !(x > 0.0 && fx > 0.0) || !x.is_finite() || !fx.is_finite() {
            return Err(Error::InvalidSamples(format!(
                "sample ({x}, {fx}) must be finite and strictly positive"
            )));
        }
        logs.push((x.ln(), fx.ln()));
    }
    let n = logs.len() as f64;
    let mean_u = logs.iter().map(|l| l.0).sum::<f64>() / n;
    let mean_v = logs.iter().map(|l| l.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(u, v) in &logs {
        sxx += (u - mean_u) * (u - mean_u);
        sxy += (u - mean_u) * (v - mean_v);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidSamples("all x values are identical".into()));
    }
    let p_hat = sxy / sxx;
    let intercept = mean_v - p_hat * mean_u;
    let sse: f64 = logs
        .iter()
        .map(|&(u, v)| {
            let r = v - (intercept + p_hat * u);
            r * r
        })
        .sum();
    let min_x = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let max_x = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    Ok(ExponentFit {
        p_hat,
        residual_rms: (sse / n).sqrt(),
        sample_range: (min_x, max_x),
    })
}

/// One draw from the log-uniform distribution on `[lo, hi]`.
pub fn log_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    (a + (b - a) * rng.random::<f64>()).exp()
}

/// `count` magnitude pairs, each coordinate log-uniform on `[lo, hi]`.
pub fn log_uniform_pairs<R: Rng + ?Sized>(count: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| (log_uniform(lo, hi, rng), log_uniform(lo, hi, rng)))
        .collect()
}

/// Default magnitude sampling domain.
pub const DEFAULT_MAGNITUDE_RANGE: (f64, f64) = (0.1, 10.0);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn additive_examples() {
        let r = check_additive_equation_real(f64::exp, &[(1.0, 2.0)]).unwrap();
        assert!(r.max_residual <= 1e-12);
        assert_eq!(r.num_samples, 1);

        let r = check_additive_equation_real(|x| x * x, &[(1.0, 1.0)]).unwrap();
        assert!((r.max_residual - 0.75).abs() < 1e-15);
        assert_eq!(r.worst_case_inputs, vec![(1.0, 1.0)]);

        let pairs = [(0.3, -4.0), (2.0, 7.5), (-1.0, 1.0)];
        let r = check_additive_equation_real(|_| 1.0, &pairs).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.mean_residual, 0.0);
        assert_eq!(r.worst_case_inputs.len(), 3);
    }

    #[test]
    fn additive_accepts_complex_arguments() {
        let pairs = [(Complex64::new(0.2, 1.0), Complex64::new(-0.4, 0.3))];
        let r = check_additive_equation(|z| z.exp(), &pairs).unwrap();
        assert!(r.max_residual < 1e-14);
        // |z|^2 does not turn sums into products off the real line either.
        let r = check_additive_equation(|z| Complex64::new(z.norm_sqr(), 0.0), &pairs).unwrap();
        assert!(r.max_residual > 0.1);
    }

    #[test]
    fn additive_errors() {
        assert!(matches!(
            check_additive_equation_real(f64::exp, &[]),
            Err(Error::InvalidSamples(_))
        ));
        assert!(matches!(
            check_additive_equation_real(|x| 1.0 / x, &[(0.0, 1.0)]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn multiplicative_examples() {
        let r = check_multiplicative_equation(|x| x * x, &[(2.0, 3.0)]).unwrap();
        assert_eq!(r.max_residual, 0.0);

        let r = check_multiplicative_equation(|x| x * x + 1.0, &[(2.0, 2.0)]).unwrap();
        // |17 - 25| / 17
        assert!((r.max_residual - 8.0 / 17.0).abs() < 1e-15);
        assert!((r.max_residual - 0.4706).abs() < 1e-4);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<(f64, f64)> = (0..1000)
            .map(|_| (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0)))
            .collect();
        for p in [1.0, 1.5, 2.0, 3.0, 4.0] {
            let r = check_multiplicative_equation(|x: f64| x.powf(p), &pairs).unwrap();
            assert!(r.max_residual <= 1e-10, "p={p}: {}", r.max_residual);
        }
    }

    #[test]
    fn multiplicative_errors() {
        assert!(matches!(
            check_multiplicative_equation(|x| x, &[(0.0, 1.0)]),
            Err(Error::InvalidSamples(_))
        ));
        assert!(matches!(
            check_multiplicative_equation(|x| x, &[(-2.0, 1.0)]),
            Err(Error::InvalidSamples(_))
        ));
        assert!(matches!(
            check_multiplicative_equation(|_| f64::NAN, &[(2.0, 1.0)]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn fit_examples() {
        let s: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 4.0].iter().map(|&x| (x, x * x)).collect();
        let fit = fit_power_exponent(&s).unwrap();
        assert!((fit.p_hat - 2.0).abs() <= 1e-10);
        assert!(fit.residual_rms <= 1e-10);
        assert_eq!(fit.sample_range, (0.5, 4.0));

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s: Vec<(f64, f64)> = (0..100)
            .map(|_| {
                let x: f64 = rng.random_range(0.1..10.0);
                (x, x.powi(3))
            })
            .collect();
        assert!((fit_power_exponent(&s).unwrap().p_hat - 3.0).abs() <= 1e-10);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_power_exponent(&[(2.0, 4.0)]).is_err());
        assert!(fit_power_exponent(&[(2.0, 4.0), (2.0, 5.0)]).is_err());
        assert!(fit_power_exponent(&[(2.0, 4.0), (3.0, 0.0)]).is_err());
        assert!(fit_power_exponent(&[(2.0, 4.0), (-3.0, 1.0)]).is_err());
    }

    #[test]
    fn log_uniform_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (x, y) in log_uniform_pairs(1000, 0.1, 10.0, &mut rng) {
            assert!((0.1..=10.0).contains(&x) && (0.1..=10.0).contains(&y));
        }
    }
}
