//! The conditional Hessian law and Monte Carlo estimates of `E|det G|`.
//!
//! Given `H/N = u` at radius `rho`, the Hessian rotated so that `x` points
//! along the first axis has the law of
//!
//! ```text
//! G = [ z1'   xi^T                                         ]
//!     [ xi    sqrt(-4D''(0)) (sqrt((N-1)/N) GOE_{N-1} - z3' I) ]
//! ```
//!
//! with `z1' = s1 z1 - s2 z2 + m1`,
//! `z3' = (s2 z2 + sqrt(alpha t rho^2 / N) z3 - m2) / sqrt(-4D''(0))` and
//! `xi ~ N(0, (-2D''(0)/N) I)`. Determinants go through the Schur complement
//! in the GOE eigenbasis and are kept in log form.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlator::Correlator;
use crate::error::{Error, Result};
use crate::geometry::{conditional_means, landscape_params, ConditionalMeans, LandscapeParams};
use crate::numeric::logsumexp;
use crate::rmt::{sample_goe_matrix, sample_goe_with, EmpiricalSpectrum};
use crate::rng::{chunks, stream_rng};

/// Draws per independent random stream in the batch estimators.
pub const CHUNK: usize = 4096;

/// The law of `G` at one `(rho, u)` for matrix size `n`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalHessianModel {
    pub params: LandscapeParams,
    pub u: f64,
    pub n: usize,
    pub means: ConditionalMeans,
    /// `sigma_1^2 = n_sigma1_sq / N`
    pub sigma1_sq: f64,
    /// `sigma_2^2 = n_sigma2_sq / N`
    pub sigma2_sq: f64,
    /// `alpha t rho^2 / N`
    pub cross: f64,
}

impl ConditionalHessianModel {
    pub fn new(c: &Correlator, mu: f64, rho: f64, u: f64, n: usize) -> Result<Self> {
        Self::from_params(landscape_params(c, mu, rho)?, u, n)
    }

    pub fn from_params(params: LandscapeParams, u: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("Hessian size must be >= 2, got {n}")));
        }
        let ar = params.alpha_rho_sq();
        if ar > 0.0 || params.frak_t > 0.0 {
            return Err(Error::Domain(format!(
                "alpha rho^2 = {ar} and t = {} must both be nonpositive",
                params.frak_t
            )));
        }
        let nf = n as f64;
        Ok(Self {
            means: conditional_means(&params, u),
            sigma1_sq: params.n_sigma1_sq / nf,
            sigma2_sq: params.n_sigma2_sq / nf,
            cross: ar * params.frak_t / nf,
            params,
            u,
            n,
        })
    }

    /// `sqrt(-4 D''(0))`
    pub fn s4(&self) -> f64 {
        (-4.0 * self.params.dpp0).sqrt()
    }

    /// Variance of each entry of `xi`.
    pub fn xi_var(&self) -> f64 {
        -2.0 * self.params.dpp0 / self.n as f64
    }

    /// `sqrt((N-1)/N)`
    fn goe_scale(&self) -> f64 {
        ((self.n - 1) as f64 / self.n as f64).sqrt()
    }

    /// `(z1', z3')` from the three scalar normals.
    pub fn z_primes(&self, z1: f64, z2: f64, z3: f64) -> (f64, f64) {
        let (s1, s2) = (self.sigma1_sq.sqrt(), self.sigma2_sq.sqrt());
        let z1p = s1 * z1 - s2 * z2 + self.means.m1;
        let z3p = (s2 * z2 + self.cross.sqrt() * z3 - self.means.m2) / self.s4();
        (z1p, z3p)
    }

    /// `(log|det G|, sign)` for one draw, by the Schur complement.
    pub fn log_abs_det(&self, d: &HessianDraw) -> (f64, f64) {
        let (z1p, z3p) = self.z_primes(d.z1, d.z2, d.z3);
        schur_log_det(self.s4(), self.goe_scale(), self.xi_var(), z1p, z3p, &d.lambdas, &d.zsq)
    }

    /// `(abar, b^2 / N)`: the law of `z1'` given `z3' = y`.
    pub fn conditional_z1_given_z3(&self, y: f64) -> (f64, f64) {
        let j2 = -2.0 * self.params.dpp0;
        let t = self.params.frak_t;
        let denom = j2 - t * t;
        let n2 = self.params.n_sigma2_sq;
        let abar = self.means.m1 - n2 * (self.s4() * y + self.means.m2) / denom;
        let ar = self.params.alpha_rho_sq();
        let b_sq = 2.0 * j2 + 2.0 * self.params.dpp0 * ar * ar / denom;
        (abar, b_sq / self.n as f64)
    }

    /// `E[G]`: `m1` in the corner, `m2` on the rest of the diagonal.
    pub fn mean_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal_element(self.n, self.n, self.means.m2);
        m[(0, 0)] = self.means.m1;
        m
    }
}

/// `det G = prod d_j (z1' - sum_k w_k^2 / d_k)` with `d_j = s4 (c lambda_j - z3')`
/// and `w_k^2 = xi_var Z_k^2`.
fn schur_log_det(
    s4: f64,
    c: f64,
    xi_var: f64,
    z1p: f64,
    z3p: f64,
    lambdas: &[f64],
    zsq: &[f64],
) -> (f64, f64) {
    let mut log_abs = 0.0;
    let mut sign = 1.0;
    let mut schur = z1p;
    let mut zero = None;
    for (k, (&l, &z)) in lambdas.iter().zip(zsq).enumerate() {
        let d = s4 * (c * l - z3p);
        if d == 0.0 {
            zero = Some(k);
            continue;
        }
        log_abs += d.abs().ln();
        if d < 0.0 {
            sign = -sign;
        }
        schur -= xi_var * z / d;
    }
    if let Some(k) = zero {
        // only the k-th term of the expansion survives
        schur = -xi_var * zsq[k];
    }
    if schur == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    (log_abs + schur.abs().ln(), if schur < 0.0 { -sign } else { sign })
}

/// Model-free randomness of one draw of `G`: three scalar normals, the
/// `GOE_{N-1}` spectrum and the squared coordinates of `xi / sd` in its
/// eigenbasis. Reusable across `(rho, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianDraw {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub lambdas: Vec<f64>,
    pub zsq: Vec<f64>,
}

impl HessianDraw {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let spec = sample_goe_with(n - 1, rng);
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        let (z1, z2, z3) = (normal(), normal(), normal());
        let zsq = (0..n - 1).map(|_| normal().powi(2)).collect();
        Self { z1, z2, z3, lambdas: spec.eigenvalues().to_vec(), zsq }
    }
}

/// Draws `count` reusable draws with the chunked stream layout.
pub fn sample_draws(n: usize, count: usize, seed: u64) -> Vec<HessianDraw> {
    chunks(count, CHUNK)
        .into_par_iter()
        .map(|(stream, _, len)| {
            let mut rng = stream_rng(seed, stream);
            (0..len).map(|_| HessianDraw::sample(n, &mut rng)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// One explicit draw of `G`.
#[derive(Debug, Clone)]
pub struct HessianSample {
    pub z1p: f64,
    pub z3p: f64,
    pub xi: DVector<f64>,
    /// The `GOE_{N-1}` matrix itself.
    pub goe: DMatrix<f64>,
    pub goe_spectrum: EmpiricalSpectrum,
    pub log_abs_det: f64,
    pub sign: f64,
}

impl HessianSample {
    /// The full `N x N` matrix `G`.
    pub fn dense(&self, m: &ConditionalHessianModel) -> DMatrix<f64> {
        let n = m.n;
        let s4 = m.s4();
        let c = m.goe_scale();
        let mut g = DMatrix::zeros(n, n);
        g[(0, 0)] = self.z1p;
        for i in 1..n {
            g[(i, 0)] = self.xi[i - 1];
            g[(0, i)] = self.xi[i - 1];
            for j in 1..n {
                g[(i, j)] = s4 * c * self.goe[(i - 1, j - 1)];
            }
            g[(i, i)] -= s4 * self.z3p;
        }
        g
    }

    /// Eigenvalues of the lower block `G_**`, `s4 (c lambda_i - z3')`.
    pub fn block_eigenvalues(&self, m: &ConditionalHessianModel) -> Vec<f64> {
        let (s4, c) = (m.s4(), m.goe_scale());
        self.goe_spectrum.eigenvalues().iter().map(|&l| s4 * (c * l - self.z3p)).collect()
    }
}

/// One explicit draw of `G` from `rng`, with the determinant from the Schur form.
pub fn sample_conditional_hessian_with<R: Rng + ?Sized>(
    m: &ConditionalHessianModel,
    rng: &mut R,
) -> HessianSample {
    let n = m.n;
    let goe = sample_goe_matrix(n - 1, rng);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let (z1, z2, z3) = (normal(), normal(), normal());
    let sd = m.xi_var().sqrt();
    let xi = DVector::from_iterator(n - 1, (0..n - 1).map(|_| sd * normal()));
    let (z1p, z3p) = m.z_primes(z1, z2, z3);

    let eig = goe.clone().symmetric_eigen();
    let w = eig.eigenvectors.transpose() * &xi;
    let lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let zsq: Vec<f64> = w.iter().map(|x| x * x / m.xi_var()).collect();
    let (log_abs_det, sign) =
        schur_log_det(m.s4(), m.goe_scale(), m.xi_var(), z1p, z3p, &lambdas, &zsq);
    HessianSample {
        z1p,
        z3p,
        xi,
        goe,
        goe_spectrum: EmpiricalSpectrum::new(lambdas),
        log_abs_det,
        sign,
    }
}

/// One explicit draw of `G`; deterministic in `seed`.
pub fn sample_conditional_hessian(m: &ConditionalHessianModel, seed: u64) -> HessianSample {
    sample_conditional_hessian_with(m, &mut stream_rng(seed, 0))
}

/// `(log|det|, sign)` of a dense matrix by LU with partial pivoting.
pub fn dense_log_abs_det(g: &DMatrix<f64>) -> (f64, f64) {
    let lu = g.clone().lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut sign = lu.p().determinant::<f64>();
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        log_abs += d.abs().ln();
        if d < 0.0 {
            sign = -sign;
        }
    }
    (log_abs, sign)
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `Cov[(G_ij, G_i'j')]`, 1-based indices:
/// `[-2D''(0)(d_ij d_i'j' + d_ii' d_jj' + d_ij' d_i'j) - (alpha rho^2 d_i1 d_j1 + t d_ij)(same for i'j')] / N`.
pub fn conditional_covariance_table(
    m: &ConditionalHessianModel,
    i: usize,
    j: usize,
    ip: usize,
    jp: usize,
) -> Result<f64> {
    let n = m.n;
    for k in [i, j, ip, jp] {
        if !(1..=n).contains(&k) {
            return Err(Error::Domain(format!("index {k} outside 1..={n}")));
        }
    }
    let ar = m.params.alpha_rho_sq();
    let t = m.params.frak_t;
    let shift = |a: usize, b: usize| ar * delta(a, 1) * delta(b, 1) + t * delta(a, b);
    let pairs = delta(i, j) * delta(ip, jp) + delta(i, ip) * delta(j, jp) + delta(i, jp) * delta(ip, j);
    Ok((-2.0 * m.params.dpp0 * pairs - shift(i, j) * shift(ip, jp)) / n as f64)
}

/// One compared moment in a [`CovarianceReport`].
#[derive(Debug, Clone, Serialize)]
pub struct MomentCheck {
    /// 1-based `(i, j)` for means, `(i, j, i', j')` for covariances.
    pub index: Vec<usize>,
    pub expected: f64,
    pub observed: f64,
    pub stderr: f64,
}

impl MomentCheck {
    pub fn z_score(&self) -> f64 {
        let d = (self.observed - self.expected).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub samples: usize,
    pub means: Vec<MomentCheck>,
    pub covariances: Vec<MomentCheck>,
    /// Largest `|observed - expected|` over all moments.
    pub max_abs_deviation: f64,
    /// Largest deviation in standard errors.
    pub max_z: f64,
    /// Pass threshold in standard errors.
    pub threshold: f64,
    pub passed: bool,
}

/// Compares the empirical entry means and covariances of `samples` dense draws
/// of `G` with the conditional mean and the covariance table, within 4
/// standard errors each.
pub fn verify_conditional_covariance(
    m: &ConditionalHessianModel,
    samples: usize,
    seed: u64,
) -> CovarianceReport {
    let n = m.n;
    let entries: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let ne = entries.len();
    let pairs: Vec<(usize, usize)> = (0..ne).flat_map(|a| (a..ne).map(move |b| (a, b))).collect();
    let mean = m.mean_matrix();

    // sums of x, x^2, x_a x_b, (x_a x_b)^2 with x centred at the exact means
    let partial: Vec<Vec<f64>> = chunks(samples, CHUNK)
        .into_par_iter()
        .map(|(stream, _, len)| {
            let mut rng = stream_rng(seed, stream);
            let mut acc = vec![0.0; 2 * ne + 2 * pairs.len()];
            let mut x = vec![0.0; ne];
            for _ in 0..len {
                let s = sample_conditional_hessian_with(m, &mut rng);
                let g = s.dense(m);
                for (k, &(i, j)) in entries.iter().enumerate() {
                    x[k] = g[(i, j)] - mean[(i, j)];
                    acc[k] += x[k];
                    acc[ne + k] += x[k] * x[k];
                }
                for (k, &(a, b)) in pairs.iter().enumerate() {
                    let p = x[a] * x[b];
                    acc[2 * ne + k] += p;
                    acc[2 * ne + pairs.len() + k] += p * p;
                }
            }
            acc
        })
        .collect();
    let mut tot = vec![0.0; 2 * ne + 2 * pairs.len()];
    for p in &partial {
        for (t, v) in tot.iter_mut().zip(p) {
            *t += v;
        }
    }

    let nf = samples as f64;
    let se = |s: f64, s2: f64| ((s2 / nf - (s / nf).powi(2)).max(0.0) / nf).sqrt();
    let means: Vec<MomentCheck> = entries
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| MomentCheck {
            index: vec![i + 1, j + 1],
            expected: mean[(i, j)],
            observed: mean[(i, j)] + tot[k] / nf,
            stderr: se(tot[k], tot[ne + k]),
        })
        .collect();
    let covariances: Vec<MomentCheck> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let ((i, j), (ip, jp)) = (entries[a], entries[b]);
            let s = tot[2 * ne + k];
            let s2 = tot[2 * ne + pairs.len() + k];
            MomentCheck {
                index: vec![i + 1, j + 1, ip + 1, jp + 1],
                expected: conditional_covariance_table(m, i + 1, j + 1, ip + 1, jp + 1)
                    .expect("indices in range"),
                observed: s / nf,
                stderr: se(s, s2),
            }
        })
        .collect();

    let all = means.iter().chain(&covariances);
    let max_abs_deviation = all.clone().map(|c| (c.observed - c.expected).abs()).fold(0.0, f64::max);
    let max_z = all.map(MomentCheck::z_score).fold(0.0, f64::max);
    let threshold = 4.0;
    CovarianceReport {
        samples,
        means,
        covariances,
        max_abs_deviation,
        max_z,
        threshold,
        passed: max_z <= threshold,
    }
}

/// Largest relative gap between the dense and the Schur log-determinants,
/// and between the block eigenvalues and their spectral form, over `draws`
/// explicit samples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SchurReport {
    pub draws: usize,
    pub max_rel_log_det: f64,
    pub max_rel_det: f64,
    pub max_abs_eigen: f64,
    pub sign_mismatches: usize,
}

pub fn verify_schur(m: &ConditionalHessianModel, draws: usize, seed: u64) -> SchurReport {
    let rows: Vec<(f64, f64, f64, usize)> = chunks(draws, 256)
        .into_par_iter()
        .flat_map_iter(|(stream, _, len)| {
            let mut rng = stream_rng(seed, stream);
            (0..len)
                .map(|_| {
                    let s = sample_conditional_hessian_with(m, &mut rng);
                    let g = s.dense(m);
                    let (ld, sd) = dense_log_abs_det(&g);
                    let rel_log = (ld - s.log_abs_det).abs() / ld.abs().max(1.0);
                    let rel_det = (ld - s.log_abs_det).exp_m1().abs();
                    let block = g.view((1, 1), (m.n - 1, m.n - 1)).into_owned();
                    let mut direct: Vec<f64> = block.symmetric_eigenvalues().iter().copied().collect();
                    direct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let mut spectral = s.block_eigenvalues(m);
                    spectral.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let eig = direct
                        .iter()
                        .zip(&spectral)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    (rel_log, rel_det, eig, usize::from(sd != s.sign))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    SchurReport {
        draws,
        max_rel_log_det: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        max_rel_det: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        max_abs_eigen: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        sign_mismatches: rows.iter().map(|r| r.3).sum(),
    }
}

/// Monte Carlo estimate of `E|det G|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetEstimate {
    /// `E|det G|`; may overflow to `inf` for large `N`, see `log_estimate`.
    pub estimate: f64,
    pub stderr: f64,
    /// `log E|det G|`.
    pub log_estimate: f64,
    /// `E log|det G|`.
    pub log_mean: f64,
    /// Fraction of draws with `det G > 0`.
    pub positive_fraction: f64,
}

/// Summarizes per-draw `(log|det|, sign)` pairs.
pub fn summarize_log_dets(rows: &[(f64, f64)]) -> DetEstimate {
    let n = rows.len() as f64;
    let logs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let log_estimate = logsumexp(&logs) - n.ln();
    let doubled: Vec<f64> = logs.iter().map(|l| 2.0 * l).collect();
    let log_second = logsumexp(&doubled) - n.ln();
    // Var = E X^2 - (E X)^2, scaled by exp(-2 log_estimate) to stay finite
    let rel_var = ((log_second - 2.0 * log_estimate).exp() - 1.0).max(0.0);
    let rel_se = (rel_var / n).sqrt();
    let estimate = log_estimate.exp();
    DetEstimate {
        estimate,
        stderr: estimate * rel_se,
        log_estimate,
        log_mean: logs.iter().sum::<f64>() / n,
        positive_fraction: rows.iter().filter(|r| r.1 > 0.0).count() as f64 / n,
    }
}

/// `E|det G|` from `samples` draws, deterministic in `seed`.
pub fn expected_abs_det_mc(
    m: &ConditionalHessianModel,
    samples: usize,
    seed: u64,
) -> Result<DetEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let rows: Vec<(f64, f64)> = sample_draws(m.n, samples, seed)
        .iter()
        .map(|d| m.log_abs_det(d))
        .collect();
    Ok(summarize_log_dets(&rows))
}
