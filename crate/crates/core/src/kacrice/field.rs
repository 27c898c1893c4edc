use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::Serialize;

use crate::correlator::Correlator;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Smallest accepted number of random features per atom.
pub const MIN_FEATURES: usize = 256;

/// One realization of `H(x) = X(x) + mu |x|^2 / 2` in dimension 2 or 3, with
/// `X(x) = sum_j a_j [cos(<w_j, x> + phi_j) - cos(phi_j)]`.
///
/// Each atom `(nu, t)` of the correlator contributes `m` features with
/// `w ~ N(0, 2 t^2 / N I)` and amplitude `sqrt(N nu / m)`, so that
/// `E[(X(x) - X(y))^2] = N D(|x - y|^2 / N)`.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSample {
    mu: f64,
    dim: usize,
    /// Row-major `features x dim`.
    freqs: Vec<f64>,
    phases: Vec<f64>,
    amps: Vec<f64>,
}

impl FieldSample {
    /// A field from explicit features.
    pub fn from_features(
        mu: f64,
        dim: usize,
        freqs: Vec<f64>,
        phases: Vec<f64>,
        amps: Vec<f64>,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain(format!("field dimension must be 2 or 3, got {dim}")));
        }
        if freqs.len() != dim * phases.len() || amps.len() != phases.len() {
            return Err(Error::InvalidParameter("feature arrays have inconsistent lengths".into()));
        }
        Ok(Self { mu, dim, freqs, phases, amps })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> usize {
        self.phases.len()
    }

    fn w(&self, j: usize) -> &[f64] {
        &self.freqs[j * self.dim..(j + 1) * self.dim]
    }

    fn angle(&self, j: usize, x: &[f64]) -> f64 {
        self.w(j).iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.phases[j]
    }

    /// The same field with `phi -> -phi` and `w -> -w`.
    pub fn reflected(&self) -> Self {
        Self {
            freqs: self.freqs.iter().map(|w| -w).collect(),
            phases: self.phases.iter().map(|p| -p).collect(),
            ..self.clone()
        }
    }

    /// `X(x)`, the field without the confinement.
    pub fn field_value(&self, x: &[f64]) -> f64 {
        (0..self.features())
            .map(|j| self.amps[j] * (self.angle(j, x).cos() - self.phases[j].cos()))
            .sum()
    }

    /// `H(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.field_value(x) + 0.5 * self.mu * x.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let mut g = DVector::from_iterator(self.dim, x.iter().map(|v| self.mu * v));
        for j in 0..self.features() {
            let s = self.amps[j] * self.angle(j, x).sin();
            for (a, w) in self.w(j).iter().enumerate() {
                g[a] -= s * w;
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut h = DMatrix::from_diagonal_element(n, n, self.mu);
        for j in 0..self.features() {
            let c = self.amps[j] * self.angle(j, x).cos();
            let w = self.w(j);
            for a in 0..n {
                for b in 0..n {
                    h[(a, b)] -= c * w[a] * w[b];
                }
            }
        }
        h
    }

    /// `(grad H, hess H)` in one pass.
    pub fn gradient_hessian(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim;
        let mut g = DVector::from_iterator(n, x.iter().map(|v| self.mu * v));
        let mut h = DMatrix::from_diagonal_element(n, n, self.mu);
        for j in 0..self.features() {
            let (s, c) = self.angle(j, x).sin_cos();
            let (s, c) = (self.amps[j] * s, self.amps[j] * c);
            let w = self.w(j);
            for a in 0..n {
                g[a] -= s * w[a];
                for b in 0..n {
                    h[(a, b)] -= c * w[a] * w[b];
                }
            }
        }
        (g, h)
    }

    /// `grad H` on the tensor grid `axis^dim`, row-major with the last axis
    /// fastest; entry `k * dim + a` is component `a` at grid point `k`.
    pub fn gradient_grid(&self, axis: &[f64]) -> Vec<f64> {
        let (n, p) = (self.dim, axis.len());
        let points = p.pow(n as u32);
        let mut out = vec![0.0; points * n];
        // e^{i(phi + <w, x>)} built as a product of per-axis factors
        let mut re = vec![0.0; points];
        let mut im = vec![0.0; points];
        let mut fac = vec![(0.0, 0.0); p];
        for j in 0..self.features() {
            let w = self.w(j);
            let (s0, c0) = self.phases[j].sin_cos();
            re[0] = c0;
            im[0] = s0;
            let mut len = 1;
            for &wa in w {
                for (f, &x) in fac.iter_mut().zip(axis) {
                    let (s, c) = (wa * x).sin_cos();
                    *f = (c, s);
                }
                for k in (0..len).rev() {
                    let (r, i) = (re[k], im[k]);
                    for (q, &(c, s)) in fac.iter().enumerate() {
                        re[k * p + q] = r * c - i * s;
                        im[k * p + q] = r * s + i * c;
                    }
                }
                len *= p;
            }
            let a = self.amps[j];
            for k in 0..points {
                let s = a * im[k];
                for (b, &wb) in w.iter().enumerate() {
                    out[k * n + b] -= s * wb;
                }
            }
        }
        let mut idx = vec![0usize; n];
        for k in 0..points {
            let mut r = k;
            for b in (0..n).rev() {
                idx[b] = r % p;
                r /= p;
            }
            for b in 0..n {
                out[k * n + b] += self.mu * axis[idx[b]];
            }
        }
        out
    }
}

/// Draws a random-feature field for an atomic correlator without linear part.
pub fn sample_field(
    c: &Correlator,
    mu: f64,
    dim: usize,
    m_features: usize,
    seed: u64,
) -> Result<FieldSample> {
    let Some((atoms, slope)) = c.spectral_atoms() else {
        return Err(Error::Unsupported(format!(
            "field sampling needs an atomic correlator, got '{}'",
            c.kind()
        )));
    };
    if slope != 0.0 {
        return Err(Error::Unsupported("field sampling needs a zero linear part".into()));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::Domain(format!("field dimension must be 2 or 3, got {dim}")));
    }
    if m_features < MIN_FEATURES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_FEATURES} features per atom, got {m_features}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    let mut rng = stream_rng(seed, 0);
    let phase = Uniform::new(0.0, std::f64::consts::TAU);
    let total = atoms.len() * m_features;
    let mut freqs = Vec::with_capacity(total * dim);
    let mut phases = Vec::with_capacity(total);
    let mut amps = Vec::with_capacity(total);
    for atom in atoms {
        let sd = (2.0 * atom.scale * atom.scale / dim as f64).sqrt();
        let normal = Normal::new(0.0, sd).expect("positive scale");
        let amp = (dim as f64 * atom.weight / m_features as f64).sqrt();
        for _ in 0..m_features {
            freqs.extend((0..dim).map(|_| normal.sample(&mut rng)));
            phases.push(rng.sample(phase));
            amps.push(amp);
        }
    }
    FieldSample::from_features(mu, dim, freqs, phases, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::Atom;
    use approx::assert_relative_eq;

    fn one_atom() -> Correlator {
        Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap()
    }

    #[test]
    fn pinned_at_the_origin() {
        for seed in 0..20 {
            let f = sample_field(&one_atom(), 0.7, 2, 256, seed).unwrap();
            assert_eq!(f.value(&[0.0, 0.0]), 0.0);
        }
    }

    #[test]
    fn zero_atoms_give_the_quadratic() {
        let c = Correlator::atomic(vec![], 0.0).unwrap();
        let f = sample_field(&c, 1.0, 3, 256, 1).unwrap();
        assert_eq!(f.features(), 0);
        assert_relative_eq!(f.value(&[1.0, 2.0, -2.0]), 4.5);
        assert_eq!(f.gradient(&[1.0, 2.0, -2.0]).as_slice(), &[1.0, 2.0, -2.0]);
    }

    #[test]
    fn rejects_unsupported_correlators() {
        let e = sample_field(&Correlator::log(1.0).unwrap(), 1.0, 2, 256, 0).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
        let lin = Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.5).unwrap();
        assert!(matches!(sample_field(&lin, 1.0, 2, 256, 0), Err(Error::Unsupported(_))));
        assert!(sample_field(&one_atom(), 1.0, 4, 256, 0).is_err());
        assert!(sample_field(&one_atom(), 1.0, 2, 16, 0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = sample_field(&one_atom(), 0.4, 3, 256, 5).unwrap();
        let x = [0.3, -0.8, 1.1];
        let (g, h) = f.gradient_hessian(&x);
        assert_eq!(g, f.gradient(&x));
        assert_eq!(h, f.hessian(&x));
        let step = 1e-5;
        for a in 0..3 {
            let mut p = x;
            let mut m = x;
            p[a] += step;
            m[a] -= step;
            let fd = (f.value(&p) - f.value(&m)) / (2.0 * step);
            assert_relative_eq!(g[a], fd, epsilon = 1e-7);
            let gd = (f.gradient(&p) - f.gradient(&m)) / (2.0 * step);
            for b in 0..3 {
                assert_relative_eq!(h[(b, a)], gd[b], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn grid_gradient_matches_pointwise() {
        for dim in [2, 3] {
            let f = sample_field(&one_atom(), 0.9, dim, 256, 2).unwrap();
            let axis = [-1.5, -0.2, 0.0, 0.7];
            let grid = f.gradient_grid(&axis);
            let p = axis.len();
            for k in 0..p.pow(dim as u32) {
                let x: Vec<f64> = (0..dim).map(|b| axis[(k / p.pow((dim - 1 - b) as u32)) % p]).collect();
                let g = f.gradient(&x);
                for b in 0..dim {
                    assert_relative_eq!(grid[k * dim + b], g[b], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn reflection_leaves_the_function_unchanged() {
        let f = sample_field(&one_atom(), 1.0, 2, 256, 3).unwrap();
        let r = f.reflected();
        for x in [[0.1, 0.2], [-1.3, 2.0], [3.0, -0.5]] {
            assert_relative_eq!(f.value(&x), r.value(&x), epsilon = 1e-12);
        }
    }
}
