//! GOE sampling and the deterministic random-matrix functions used by the
//! complexity formulas: the semicircle log-potential and the rate function
//! of the smallest eigenvalue.
//!
//! Normalization: `E M_ij = 0`, `E M_ij^2 = (1 + delta_ij) / (2n)`, so the
//! spectrum fills `[-sqrt 2, sqrt 2]`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI, SQRT_2};

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Sorted eigenvalues of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSpectrum {
    eigenvalues: Vec<f64>,
}

impl EmpiricalSpectrum {
    /// Sorts `eigenvalues` ascending. NaNs are not allowed.
    pub fn new(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("NaN eigenvalue"));
        Self { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.n() as f64
    }

    /// Fraction of eigenvalues in `[lo, hi]`.
    pub fn fraction_in(&self, lo: f64, hi: f64) -> f64 {
        let a = self.eigenvalues.partition_point(|&x| x < lo);
        let b = self.eigenvalues.partition_point(|&x| x <= hi);
        (b - a) as f64 / self.n() as f64
    }

    /// `(1/n) sum_i f(lambda_i)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.eigenvalues.iter().map(|&x| f(x)).sum::<f64>() / self.n() as f64
    }
}

/// Dense `n x n` GOE matrix drawn from `rng`.
pub fn sample_goe_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let off = (0.5 / n as f64).sqrt();
    let diag = (1.0 / n as f64).sqrt();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let z: f64 = rng.sample(StandardNormal);
            if i == j {
                m[(i, i)] = diag * z;
            } else {
                m[(i, j)] = off * z;
                m[(j, i)] = off * z;
            }
        }
    }
    m
}

/// Spectrum of an `n x n` GOE matrix drawn from `rng`.
pub fn sample_goe_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> EmpiricalSpectrum {
    assert!(n >= 1, "GOE size must be positive");
    let m = sample_goe_matrix(n, rng);
    EmpiricalSpectrum::new(m.symmetric_eigenvalues().iter().copied().collect())
}

/// Spectrum of an `n x n` GOE matrix; deterministic in `seed`.
pub fn sample_goe(n: usize, seed: u64) -> EmpiricalSpectrum {
    sample_goe_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Semicircle density on `[-sqrt 2, sqrt 2]`.
pub fn semicircle_density(t: f64) -> f64 {
    if t.abs() >= SQRT_2 {
        0.0
    } else {
        (2.0 - t * t).sqrt() / PI
    }
}

/// `Psi*(x) = int log|x - t| sigma_sc(dt)`.
pub fn semicircle_log_potential(x: f64) -> f64 {
    let a = x.abs();
    let base = 0.5 * x * x - 0.5;
    if a <= SQRT_2 {
        base - 0.5 * LN_2
    } else {
        let s = (x * x - 2.0).sqrt();
        base - LN_2 - 0.5 * a * s + (a + s).ln()
    }
}

/// `Psi(nu, x) = (1/n) sum log|x - lambda_i|`; `-inf` when `x` hits an eigenvalue.
pub fn log_potential(s: &EmpiricalSpectrum, x: f64) -> f64 {
    let mut acc = 0.0;
    for &l in s.eigenvalues() {
        let d = (x - l).abs();
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += d.ln();
    }
    acc / s.n() as f64
}

/// Rate function of the smallest eigenvalue:
/// `int_x^{-sqrt 2} sqrt(z^2 - 2) dz` for `x <= -sqrt 2`, `+inf` otherwise.
pub fn rate_function_j1(x: f64) -> f64 {
    if x > -SQRT_2 {
        return f64::INFINITY;
    }
    let s2 = x * x - 2.0;
    if s2 <= 4.0 * f64::EPSILON {
        return 0.0;
    }
    let s = s2.sqrt();
    (0.5 * LN_2 - 0.5 * x * s - (-x + s).ln()).max(0.0)
}

/// Number of clipped ramps in the test-function dictionary.
pub const BL_DICTIONARY: usize = 64;

/// Bounded-Lipschitz distance to the semicircle law, estimated on the
/// dictionary `f_c(t) = clamp(t - c, -1, 1)` for 64 centres `c` in `[-3, 3]`.
/// Every `f_c` has sup norm and Lipschitz constant 1.
pub fn bounded_lipschitz_distance(s: &EmpiricalSpectrum) -> f64 {
    let rule = GaussLegendre::new(32).expect("Gauss-Legendre order");
    (0..BL_DICTIONARY)
        .map(|k| {
            let c = -3.0 + 6.0 * k as f64 / (BL_DICTIONARY - 1) as f64;
            let f = |t: f64| (t - c).clamp(-1.0, 1.0);
            let empirical = s.integrate(f);
            (empirical - semicircle_expectation(&rule, f, &[c - 1.0, c + 1.0])).abs()
        })
        .fold(0.0, f64::max)
}

/// `int f d sigma_sc` for `f` smooth between the given breakpoints, via
/// `t = sqrt 2 sin(theta)`.
fn semicircle_expectation<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: F, kinks: &[f64]) -> f64 {
    let mut cuts = vec![-FRAC_PI_2, FRAC_PI_2];
    for &k in kinks {
        if k.abs() < SQRT_2 {
            cuts.push((k / SQRT_2).asin());
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.windows(2)
        .map(|w| {
            rule.integrate(w[0], w[1], |th| {
                let c = th.cos();
                f(SQRT_2 * th.sin()) * 2.0 / PI * c * c
            })
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_potential_values() {
        assert_relative_eq!(semicircle_log_potential(0.0), -0.846_573_590_279_972_6, epsilon = 1e-15);
        let inner = 1.0 - 0.5 - 0.5 * LN_2;
        assert_relative_eq!(semicircle_log_potential(SQRT_2), inner, epsilon = 1e-15);
        assert_relative_eq!(semicircle_log_potential(2.0), 0.620_586_434, epsilon = 1e-9);
        assert_eq!(semicircle_log_potential(-2.5), semicircle_log_potential(2.5));
    }

    #[test]
    fn rate_function_values() {
        assert_eq!(rate_function_j1(-SQRT_2), 0.0);
        assert_eq!(rate_function_j1(0.0), f64::INFINITY);
        assert_relative_eq!(rate_function_j1(-2.0), 0.532_839_975, epsilon = 1e-9);
    }

    #[test]
    fn empirical_potential_edge_cases() {
        let s = EmpiricalSpectrum::new(vec![1.0, -1.0]);
        assert_eq!(log_potential(&s, 0.0), 0.0);
        let s = EmpiricalSpectrum::new(vec![0.0]);
        assert_relative_eq!(log_potential(&s, std::f64::consts::E), 1.0, epsilon = 1e-15);
        assert_eq!(log_potential(&s, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn spectrum_queries() {
        let s = EmpiricalSpectrum::new(vec![3.0, -1.0, 0.5, 2.0]);
        assert_eq!(s.eigenvalues(), &[-1.0, 0.5, 2.0, 3.0]);
        assert_eq!(s.fraction_in(0.0, 2.0), 0.5);
        assert_eq!((s.min(), s.max()), (-1.0, 3.0));
    }

    #[test]
    fn goe_is_reproducible_and_scaled() {
        assert_eq!(sample_goe(50, 3), sample_goe(50, 3));
        assert_ne!(sample_goe(50, 3), sample_goe(50, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut d, mut o) = (0.0, 0.0);
        let reps = 20_000;
        for _ in 0..reps {
            let m = sample_goe_matrix(1, &mut rng);
            d += m[(0, 0)] * m[(0, 0)];
            let m = sample_goe_matrix(2, &mut rng);
            o += m[(0, 1)] * m[(0, 1)];
        }
        assert!((d / reps as f64 - 1.0).abs() < 0.05);
        assert!((o / reps as f64 - 0.25).abs() < 0.0125);
    }

    #[test]
    fn semicircle_is_a_probability_measure() {
        let rule = GaussLegendre::new(32).unwrap();
        assert_relative_eq!(semicircle_expectation(&rule, |_| 1.0, &[]), 1.0, epsilon = 1e-14);
        assert_relative_eq!(semicircle_expectation(&rule, |t| t * t, &[0.3]), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn bl_distance_is_small_for_a_large_sample() {
        let s = sample_goe(400, 5);
        assert!(bounded_lipschitz_distance(&s) < 0.05);
        let shifted = EmpiricalSpectrum::new(s.eigenvalues().iter().map(|x| x + 1.0).collect());
        assert!(bounded_lipschitz_distance(&shifted) > 0.3);
    }
}
