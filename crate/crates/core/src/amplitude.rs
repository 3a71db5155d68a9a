//! Amplitudes, configurations, candidate weight functions and unitary steps.
//!
//! A [`Configuration`] is a vector of complex amplitudes indexed by outcome
//! labels. A [`WeightFunction`] assigns the weight `|α|^p` to each amplitude;
//! only the magnitude enters, so every weight is blind to a phase rotation
//! `α ↦ e^{iθ}α`. Reversible steps are [`Unitary`] matrices acting linearly
//! on the amplitude vector.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-entry tolerance on `U^H U - I` used when none is given.
pub const DEFAULT_UNITARY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    pub re: f64,
    pub im: f64,
}

impl Amplitude {
    pub const ZERO: Amplitude = Amplitude { re: 0.0, im: 0.0 };
    pub const ONE: Amplitude = Amplitude { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Amplitude { re, im }
    }

    pub fn real(re: f64) -> Self {
        Amplitude { re, im: 0.0 }
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Self {
        Complex64::from_polar(magnitude, phase).into()
    }

    /// `|α|`, computed without intermediate overflow.
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }

    /// `e^{iθ}·α`.
    pub fn rotate(&self, theta: f64) -> Self {
        (Complex64::from_polar(1.0, theta) * self.to_complex()).into()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for Amplitude {
    fn from(z: Complex64) -> Self {
        Amplitude { re: z.re, im: z.im }
    }
}

impl From<Amplitude> for Complex64 {
    fn from(a: Amplitude) -> Self {
        a.to_complex()
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0.0 {
            write!(f, "{}-{}i", self.re, -self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Amplitudes over a set of distinct outcome labels.
///
/// Labels are shared behind an `Arc` so that post-record configurations,
/// which reuse the labels of their parent, are cheap to produce.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    amplitudes: Vec<Amplitude>,
    labels: Arc<[String]>,
}

impl Configuration {
    /// Builds a configuration labelled `"0"`, `"1"`, ...
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self> {
        let labels = default_labels(amplitudes.len());
        Self::with_shared_labels(amplitudes, labels)
    }

    pub fn with_labels(amplitudes: Vec<Amplitude>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != amplitudes.len() {
            return Err(Error::InvalidLabels(format!(
                "{} labels for {} amplitudes",
                labels.len(),
                amplitudes.len()
            )));
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidLabels(format!("duplicate label {:?}", w[0])));
        }
        Self::with_shared_labels(amplitudes, labels.into())
    }

    fn with_shared_labels(amplitudes: Vec<Amplitude>, labels: Arc<[String]>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        if let Some(a) = amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(Error::NonFinite(format!("amplitude {a}")));
        }
        if amplitudes.iter().all(Amplitude::is_zero) {
            return Err(Error::ZeroConfiguration);
        }
        Ok(Configuration { amplitudes, labels })
    }

    pub fn from_complex(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&z| z.into()).collect())
    }

    /// Builds amplitudes `sqrt(w_k)·e^{iφ_k}` from squared magnitudes and
    /// optional phases in radians. The magnitudes are taken as given, not
    /// renormalized.
    pub fn from_squared_magnitudes(weights: &[f64], phases: Option<&[f64]>) -> Result<Self> {
        if let Some(phases) = phases {
            if phases.len() != weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: weights.len(),
                    actual: phases.len(),
                });
            }
        }
        let mut amplitudes = Vec::with_capacity(weights.len());
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "squared magnitude must be finite and non-negative, got {w}"
                )));
            }
            let phase = phases.map_or(0.0, |ph| ph[k]);
            if !phase.is_finite() {
                return Err(Error::NonFinite(format!("phase {phase}")));
            }
            amplitudes.push(Amplitude::from_polar(w.sqrt(), phase));
        }
        Self::new(amplitudes)
    }

    /// Standard basis vector `e_index`.
    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for n = {n}")));
        }
        let mut amplitudes = vec![Amplitude::ZERO; n];
        amplitudes[index] = Amplitude::ONE;
        Self::new(amplitudes)
    }

    /// Amplitudes drawn independently from the standard complex Gaussian.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let amplitudes = (0..n).map(|_| complex_gaussian(rng).into()).collect();
        Self::new(amplitudes)
    }

    /// Same labels, new amplitudes.
    pub(crate) fn relabel(&self, amplitudes: Vec<Amplitude>) -> Result<Self> {
        if amplitudes.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: amplitudes.len(),
            });
        }
        Self::with_shared_labels(amplitudes, Arc::clone(&self.labels))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.amplitudes.iter().map(|a| a.to_complex()).collect()
    }
}

fn default_labels(n: usize) -> Arc<[String]> {
    (0..n).map(|k| k.to_string()).collect()
}

/// Candidate weight assignment `μ(α) = |α|^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    p: f64,
}

impl WeightFunction {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(WeightFunction { p })
    }

    /// The Born weight, `p = 2`.
    pub fn quadratic() -> Self {
        WeightFunction { p: 2.0 }
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn weight(&self, alpha: &Amplitude) -> Result<f64> {
        if !alpha.is_finite() {
            return Err(Error::NonFinite(format!("amplitude {alpha}")));
        }
        Ok(self.weight_of_magnitude(alpha.magnitude()))
    }

    pub(crate) fn weight_of_magnitude(&self, magnitude: f64) -> f64 {
        if magnitude == 0.0 {
            0.0
        } else {
            magnitude.powf(self.p)
        }
    }

    /// `Σ_i |α_i|^p`; strictly positive for any valid configuration.
    pub fn total_weight(&self, configuration: &Configuration) -> Result<f64> {
        let mut total = 0.0;
        for a in configuration.amplitudes() {
            total += self.weight(a)?;
        }
        if total <= 0.0 {
            // Reachable only through underflow of tiny magnitudes.
            return Err(Error::ZeroWeight);
        }
        Ok(total)
    }
}

/// `Σ_i |x_i|^p`.
pub fn p_sum(x: &[Complex64], p: f64) -> f64 {
    x.iter()
        .map(|z| {
            let m = z.norm();
            if m == 0.0 {
                0.0
            } else {
                m.powf(p)
            }
        })
        .sum()
}

/// `‖x‖_p = (Σ_i |x_i|^p)^{1/p}`.
pub fn p_norm(x: &[Complex64], p: f64) -> f64 {
    p_sum(x, p).powf(1.0 / p)
}

/// One sample of the standard complex Gaussian (independent `N(0, 1)` real
/// and imaginary parts).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// A square complex matrix with `U^H U = I` to a max-entry tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    entries: DMatrix<Complex64>,
}

impl Unitary {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(entries, DEFAULT_UNITARY_TOLERANCE)
    }

    pub fn with_tolerance(entries: DMatrix<Complex64>, tolerance: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidArgument("unitary must have dimension >= 1".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("unitary entry".into()));
        }
        let deviation = unitarity_deviation(&entries);
        if deviation.is_nan() || deviation > tolerance {
            return Err(Error::NotUnitary { deviation, tolerance });
        }
        Ok(Unitary { entries })
    }

    pub fn identity(n: usize) -> Self {
        Unitary {
            entries: DMatrix::identity(n, n),
        }
    }

    /// The 2x2 Hadamard matrix `[[1, 1], [1, -1]] / √2`.
    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Unitary {
            entries: DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(h, 0.0),
                    Complex64::new(h, 0.0),
                    Complex64::new(h, 0.0),
                    Complex64::new(-h, 0.0),
                ],
            ),
        }
    }

    /// `diag(e^{iφ_1}, ..., e^{iφ_n})`.
    pub fn phase_diagonal(phases: &[f64]) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("phase".into()));
        }
        let diag: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// Haar-distributed unitary: QR of a complex Gaussian matrix, with the
    /// phases of `R`'s diagonal moved into `Q`.
    pub fn haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1, "haar unitary needs n >= 1");
        let gaussian = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
        let qr = gaussian.qr();
        let mut q = qr.q();
        let r = qr.r();
        for k in 0..n {
            let d = r[(k, k)];
            let norm = d.norm();
            let phase = if norm > 0.0 { d / norm } else { Complex64::new(1.0, 0.0) };
            for i in 0..n {
                q[(i, k)] *= phase;
            }
        }
        Unitary { entries: q }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary {
            entries: self.entries.adjoint(),
        }
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn compose(&self, other: &Unitary) -> Result<Unitary> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Unitary {
            entries: &self.entries * &other.entries,
        })
    }

    /// `α'_i = Σ_j U_ij α_j`.
    pub fn apply(&self, configuration: &Configuration) -> Result<Configuration> {
        if self.dim() != configuration.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: configuration.len(),
            });
        }
        let amps = configuration.amplitudes();
        let out = (0..self.dim())
            .map(|i| {
                amps.iter()
                    .enumerate()
                    .map(|(j, a)| self.entries[(i, j)] * a.to_complex())
                    .sum::<Complex64>()
                    .into()
            })
            .collect();
        configuration.relabel(out)
    }

    pub(crate) fn from_matrix_unchecked(entries: DMatrix<Complex64>) -> Self {
        Unitary { entries }
    }
}

/// `max_ij |(U^H U - I)_ij|`.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let n = gram.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    #[test]
    fn weight_examples() {
        let p2 = WeightFunction::quadratic();
        let p4 = WeightFunction::new(4.0).unwrap();
        assert_eq!(p2.weight(&Amplitude::ONE).unwrap(), 1.0);
        let a0 = c(0.6, 0.8);
        for k in 0..16 {
            let theta = k as f64 * 0.41;
            let w = p2.weight(&a0.rotate(theta)).unwrap();
            assert!((w - 1.0).abs() <= 1e-12);
            assert!((w - p2.weight(&a0).unwrap()).abs() <= 1e-12);
        }
        // (1/√2)^4 = 1/4
        assert!((p4.weight(&Amplitude::real(FRAC_1_SQRT_2)).unwrap() - 0.25).abs() < 1e-15);
        assert!((p2.weight(&Amplitude::real(0.3f64.sqrt())).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(p4.weight(&Amplitude::ZERO).unwrap(), 0.0);
        assert_eq!(WeightFunction::new(0.5).unwrap().weight(&Amplitude::ZERO).unwrap(), 0.0);
    }

    #[test]
    fn weight_rejects_non_finite() {
        let p2 = WeightFunction::quadratic();
        assert!(matches!(p2.weight(&c(f64::NAN, 0.0)), Err(Error::NonFinite(_))));
        assert!(matches!(p2.weight(&c(0.0, f64::INFINITY)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn exponent_must_be_positive() {
        for p in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(WeightFunction::new(p).is_err());
        }
    }

    #[test]
    fn total_weight_examples() {
        let p2 = WeightFunction::quadratic();
        let p4 = WeightFunction::new(4.0).unwrap();
        let e0 = Configuration::basis_state(2, 0).unwrap();
        assert_eq!(p2.total_weight(&e0).unwrap(), 1.0);
        let even = Configuration::new(vec![Amplitude::real(FRAC_1_SQRT_2); 2]).unwrap();
        assert!((p4.total_weight(&even).unwrap() - 0.5).abs() < 1e-15);
        let c37 = Configuration::from_squared_magnitudes(&[0.3, 0.7], None).unwrap();
        assert!((p2.total_weight(&c37).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn configuration_validation() {
        assert_eq!(Configuration::new(vec![]), Err(Error::EmptyConfiguration));
        assert_eq!(
            Configuration::new(vec![Amplitude::ZERO; 3]),
            Err(Error::ZeroConfiguration)
        );
        assert!(matches!(
            Configuration::with_labels(vec![Amplitude::ONE, Amplitude::ZERO], vec!["a".into(), "a".into()]),
            Err(Error::InvalidLabels(_))
        ));
        assert!(matches!(
            Configuration::with_labels(vec![Amplitude::ONE], vec!["a".into(), "b".into()]),
            Err(Error::InvalidLabels(_))
        ));
        assert!(Configuration::from_squared_magnitudes(&[-0.1, 1.0], None).is_err());
        let c = Configuration::with_labels(vec![Amplitude::ONE, Amplitude::ZERO], vec!["up".into(), "down".into()]).unwrap();
        assert_eq!(c.labels(), &["up".to_string(), "down".to_string()]);
    }

    #[test]
    fn apply_unitary_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Configuration::random(3, &mut rng).unwrap();
        assert_eq!(Unitary::identity(3).apply(&c).unwrap(), c);

        let e0 = Configuration::basis_state(2, 0).unwrap();
        let out = Unitary::hadamard().apply(&e0).unwrap();
        for a in out.amplitudes() {
            assert!((a.re - FRAC_1_SQRT_2).abs() < 1e-15 && a.im == 0.0);
        }

        let (theta, phi) = (0.7, -2.1);
        let ab = Configuration::new(vec![c_amp(0.3, 0.4), c_amp(-0.5, 0.1)]).unwrap();
        let out = Unitary::phase_diagonal(&[theta, phi]).unwrap().apply(&ab).unwrap();
        let expect = [ab.amplitudes()[0].rotate(theta), ab.amplitudes()[1].rotate(phi)];
        for (x, y) in out.amplitudes().iter().zip(expect.iter()) {
            assert!((x.re - y.re).abs() < 1e-15 && (x.im - y.im).abs() < 1e-15);
        }
        for (x, y) in out.amplitudes().iter().zip(ab.amplitudes()) {
            assert!((x.magnitude() - y.magnitude()).abs() < 1e-15);
        }
    }

    fn c_amp(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    #[test]
    fn apply_unitary_dimension_mismatch() {
        let c = Configuration::basis_state(3, 0).unwrap();
        assert_eq!(
            Unitary::hadamard().apply(&c),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        );
    }

    #[test]
    fn non_unitary_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(matches!(Unitary::new(m), Err(Error::NotUnitary { .. })));
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(Unitary::new(rect), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn haar_samples_are_unitary_and_norm_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let p2 = WeightFunction::quadratic();
        for n in 1..=6 {
            for _ in 0..20 {
                let u = Unitary::haar(n, &mut rng);
                assert!(unitarity_deviation(u.matrix()) < 1e-12);
                let c = Configuration::random(n, &mut rng).unwrap();
                let before = p2.total_weight(&c).unwrap();
                let after = p2.total_weight(&u.apply(&c).unwrap()).unwrap();
                assert!((after - before).abs() <= 1e-10 * before);
            }
        }
    }

    #[test]
    fn haar_first_moment_matches() {
        // E|U_00|^2 = 1/n under the Haar measure.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 3;
        let trials = 4000;
        let mean: f64 = (0..trials)
            .map(|_| Unitary::haar(n, &mut rng).matrix()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / trials as f64;
        // Var |U_00|^2 = (n-1)/(n^2 (n+1)) = 1/18; 4 sigma band.
        let sigma = (1.0f64 / 18.0 / trials as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() < 4.0 * sigma, "mean {mean}");
    }

    #[test]
    fn interference_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p2 = WeightFunction::quadratic();
        for _ in 0..1000 {
            let a1 = complex_gaussian(&mut rng);
            let a2 = complex_gaussian(&mut rng);
            let lhs = p2.weight(&(a1 + a2).into()).unwrap();
            let rhs = p2.weight(&a1.into()).unwrap() + p2.weight(&a2.into()).unwrap() + 2.0 * (a1 * a2.conj()).re;
            assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
        }
        // Equal and opposite amplitudes cancel: weights are not additive.
        let a = Amplitude::real(0.5);
        let sum: Amplitude = (a.to_complex() + a.rotate(PI).to_complex()).into();
        assert!(p2.weight(&sum).unwrap() < 1e-30);
    }

    #[test]
    fn p_norm_basics() {
        let x = [Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)];
        assert!((p_norm(&x, 2.0) - 5.0).abs() < 1e-15);
        assert!((p_norm(&x, 1.0) - 7.0).abs() < 1e-15);
    }
}
