//! Continuous linear isometries of the p-norm on `C^n`.
//!
//! A one-parameter flow `x(t) = exp(tA) x` preserves `Σ_i |x_i|^p` for every
//! `x` only if the first-order condition
//!
//! ```text
//! Σ_i |x_i|^{p-2} Re( conj(x_i) (A x)_i ) = 0
//! ```
//!
//! holds for every `x`. Each sampled vector gives one real-linear constraint
//! on the `2n²` real parameters of `A`, and the null space of the stacked
//! constraints is the Lie algebra of the connected isometry group. For
//! `p = 2` that algebra is the anti-Hermitian matrices (dimension `n²`);
//! for any other `p` only the diagonal phase generators `i·diag(a_1..a_n)`
//! survive (dimension `n`), leaving permutations times phases as the only
//! other isometries.
//!
//! Parameters are laid out row-major: index `2(i·n + j)` holds `Re A_ij` and
//! `2(i·n + j) + 1` holds `Im A_ij`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplitude::{complex_gaussian, p_norm, Unitary};
use crate::error::{Error, Result};

/// Minimum allowed `|x_i|` in constraint sample vectors.
pub const DEFAULT_SAMPLE_FLOOR: f64 = 1e-3;
/// Singular values at or below this fraction of the largest are dropped.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;
/// Smallest acceptable ratio between the last kept and first dropped
/// singular value.
pub const REQUIRED_RANK_GAP: f64 = 10.0;
/// Largest Frobenius norm of `tA` accepted by the finite-time check.
pub const MAX_EXPONENT_NORM: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConstraintSystem {
    n: usize,
    p: f64,
    sample_floor: f64,
    constraint_matrix: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryScanResult {
    pub n: usize,
    pub p: f64,
    pub estimated_dimension: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Smallest kept over largest dropped singular value; infinite when the
    /// dropped values are exactly zero or nothing is dropped.
    pub rank_gap: f64,
}

/// Scan result together with a basis of the generator space.
#[derive(Clone, Debug)]
pub struct IsometryAnalysis {
    pub result: IsometryScanResult,
    pub generators: Vec<DMatrix<Complex64>>,
}

/// Smallest sample count accepted for dimension `n`.
pub fn min_samples(n: usize) -> usize {
    10 * 2 * n * n
}

impl GeneratorConstraintSystem {
    /// Builds `m` constraint rows with the default sample floor.
    pub fn build<R: Rng + ?Sized>(n: usize, p: f64, m: usize, rng: &mut R) -> Result<Self> {
        Self::build_with_floor(n, p, m, DEFAULT_SAMPLE_FLOOR, rng)
    }

    pub fn build_with_floor<R: Rng + ?Sized>(
        n: usize,
        p: f64,
        m: usize,
        sample_floor: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {n}")));
        }
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::InvalidExponent(p));
        }
        if m < min_samples(n) {
            return Err(Error::InvalidArgument(format!(
                "need at least {} samples for n = {n}, got {m}",
                min_samples(n)
            )));
        }
        if !sample_floor.is_finite() || sample_floor <= 0.0 {
            return Err(Error::InvalidArgument(format!("sample floor must be positive, got {sample_floor}")));
        }
        let samples = sample_vectors(n, m, sample_floor, rng)?;
        let params = 2 * n * n;
        let mut constraint_matrix = DMatrix::zeros(m, params);
        for (row, x) in samples.iter().enumerate() {
            let coefficients = constraint_row(x, p);
            for (k, c) in coefficients.iter().enumerate() {
                constraint_matrix[(row, k)] = *c;
            }
        }
        Ok(GeneratorConstraintSystem {
            n,
            p,
            sample_floor,
            constraint_matrix,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sample_floor(&self) -> f64 {
        self.sample_floor
    }

    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.constraint_matrix
    }

    /// Per-row value of the first-order functional at `generator`.
    pub fn residuals(&self, generator: &DMatrix<Complex64>) -> Result<DVector<f64>> {
        if generator.nrows() != self.n || generator.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: generator.nrows().max(generator.ncols()),
            });
        }
        Ok(&self.constraint_matrix * generator_to_params(generator))
    }

    pub fn max_residual(&self, generator: &DMatrix<Complex64>) -> Result<f64> {
        Ok(self.residuals(generator)?.amax())
    }
}

/// Complex-Gaussian vectors, resampled until every component clears the floor.
pub fn sample_vectors<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    floor: f64,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>> {
    let max_attempts = 100 * count;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == max_attempts {
            return Err(Error::SamplingExhausted {
                produced: out.len(),
                requested: count,
                attempts,
                floor,
            });
        }
        attempts += 1;
        let x: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        if x.iter().all(|z| z.norm() >= floor) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Unit-length coefficient row of the first-order functional at `x`.
fn constraint_row(x: &[Complex64], p: f64) -> Vec<f64> {
    let n = x.len();
    let mut row = vec![0.0; 2 * n * n];
    for i in 0..n {
        let scale = x[i].norm().powf(p - 2.0);
        for j in 0..n {
            // Re(conj(x_i) (a + ib) x_j) = a Re(conj(x_i) x_j) - b Im(conj(x_i) x_j)
            let z = x[i].conj() * x[j];
            let k = 2 * (i * n + j);
            row[k] = scale * z.re;
            row[k + 1] = -scale * z.im;
        }
    }
    let norm = row.iter().map(|c| c * c).sum::<f64>().sqrt();
    for c in &mut row {
        *c /= norm;
    }
    row
}

pub fn generator_to_params(generator: &DMatrix<Complex64>) -> DVector<f64> {
    let n = generator.nrows();
    DVector::from_fn(2 * n * n, |k, _| {
        let z = generator[((k / 2) / n, (k / 2) % n)];
        if k % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

pub fn params_to_generator(params: &[f64], n: usize) -> DMatrix<Complex64> {
    assert_eq!(params.len(), 2 * n * n, "parameter vector length");
    DMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(params[k], params[k + 1])
    })
}

/// Singular-value spectrum, numerical rank, and generator dimension.
pub fn estimate_generator_dimension(
    system: &GeneratorConstraintSystem,
    rank_tolerance: f64,
) -> Result<IsometryScanResult> {
    analyze_generators(system, rank_tolerance).map(|a| a.result)
}

/// Like [`estimate_generator_dimension`], also returning an orthonormal
/// (in parameter space) basis of the generator space.
pub fn analyze_generators(system: &GeneratorConstraintSystem, rank_tolerance: f64) -> Result<IsometryAnalysis> {
    if !rank_tolerance.is_finite() || rank_tolerance <= 0.0 || rank_tolerance >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must lie in (0, 1), got {rank_tolerance}"
        )));
    }
    let params = system.constraint_matrix.ncols();
    let svd = system.constraint_matrix.clone().svd(false, true);
    let singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    let v_t = svd.v_t.expect("right singular vectors were requested");

    let largest = singular_values[0];
    let threshold = rank_tolerance * largest;
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();

    let rank_gap = if rank == 0 {
        return Err(Error::AmbiguousRank {
            gap: 0.0,
            required: REQUIRED_RANK_GAP,
        });
    } else if rank < singular_values.len() {
        singular_values[rank - 1] / singular_values[rank]
    } else {
        if singular_values[rank - 1] < REQUIRED_RANK_GAP * threshold {
            return Err(Error::AmbiguousRank {
                gap: singular_values[rank - 1] / threshold,
                required: REQUIRED_RANK_GAP,
            });
        }
        f64::INFINITY
    };
    if rank_gap < REQUIRED_RANK_GAP {
        return Err(Error::AmbiguousRank {
            gap: rank_gap,
            required: REQUIRED_RANK_GAP,
        });
    }

    // v_t has one row per parameter when m >= 2n^2, so rows past the rank
    // span the null space.
    let mut generators = Vec::with_capacity(params - rank);
    for k in rank..v_t.nrows() {
        let row: Vec<f64> = v_t.row(k).iter().copied().collect();
        generators.push(params_to_generator(&row, system.n));
    }
    if v_t.nrows() < params {
        // Unreachable given the m >= 20 n^2 precondition.
        return Err(Error::InvalidArgument("constraint system has fewer rows than parameters".into()));
    }

    Ok(IsometryAnalysis {
        result: IsometryScanResult {
            n: system.n,
            p: system.p,
            estimated_dimension: params - rank,
            singular_values,
            rank_gap,
        },
        generators,
    })
}

/// `max_{t, x} | ‖exp(tA) x‖_p − ‖x‖_p | / ‖x‖_p`.
pub fn verify_generator_finite_time(
    generator: &DMatrix<Complex64>,
    p: f64,
    t_grid: &[f64],
    x_samples: &[Vec<Complex64>],
) -> Result<f64> {
    if !generator.is_square() {
        return Err(Error::NotSquare {
            rows: generator.nrows(),
            cols: generator.ncols(),
        });
    }
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::InvalidExponent(p));
    }
    if t_grid.is_empty() || x_samples.is_empty() {
        return Err(Error::InvalidSamples("empty time grid or sample set".into()));
    }
    let n = generator.nrows();
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let scaled = generator * Complex64::new(t, 0.0);
        let size = scaled.norm();
        if !size.is_finite() || size > MAX_EXPONENT_NORM {
            return Err(Error::ExponentialOverflow(size));
        }
        let flow = scaled.exp();
        for x in x_samples {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
            }
            let before = p_norm(x, p);
            if before == 0.0 || !before.is_finite() {
                return Err(Error::InvalidSamples("sample vector has zero or non-finite norm".into()));
            }
            let moved = &flow * DVector::from_column_slice(x);
            let after = p_norm(moved.as_slice(), p);
            if !after.is_finite() {
                return Err(Error::NonFinite("flowed vector".into()));
            }
            worst = worst.max((after - before).abs() / before);
        }
    }
    Ok(worst)
}

/// The matrix with `e^{iφ_k}` at `(perm[k], k)` (zero-based `perm`).
pub fn permutation_phase_isometry(perm: &[usize], phases: &[f64]) -> Result<Unitary> {
    let n = perm.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty permutation".into()));
    }
    if phases.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: phases.len(),
        });
    }
    let mut seen = vec![false; n];
    for &target in perm {
        if target >= n || seen[target] {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[target] = true;
    }
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("phase".into()));
    }
    let mut entries = DMatrix::zeros(n, n);
    for (k, (&target, &phase)) in perm.iter().zip(phases).enumerate() {
        entries[(target, k)] = Complex64::from_polar(1.0, phase);
    }
    Ok(Unitary::from_matrix_unchecked(entries))
}
