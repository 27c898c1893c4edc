//! Radius-dependent scalars of the conditional Hessian law, in N-free form.
//!
//! With `r = rho^2` and `Q = D(r) - D'(r)^2 r / D'(0)` (the N-free variance of
//! `H/N` at radius `rho`), the two shape coefficients are
//! `alpha = 2 D''(r) / sqrt(Q)` and `t = (D'(r) - D'(0)) / sqrt(Q)`. Both
//! vanish-over-vanish as `rho -> 0`, so small radii use a first-order Taylor
//! form blended into the exact one over one decade of `rho`.

use serde::Serialize;

use crate::correlator::Correlator;
use crate::error::{Error, Result};

/// Above this radius the exact shape coefficients are used.
pub const RHO_SWITCH: f64 = 1e-3;
/// Below this radius only the Taylor form is used.
const RHO_TAYLOR: f64 = 1e-4;

/// Shape coefficients at one radius, without `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shape {
    pub rho: f64,
    /// `alpha * rho^2`
    pub alpha_rho_sq: f64,
    pub frak_t: f64,
    /// `N sigma_1^2 = -4 D''(0) - (alpha rho^2 + t) alpha rho^2`
    pub n_sigma1_sq: f64,
    /// `N sigma_2^2 = -2 D''(0) - (alpha rho^2 + t) t`
    pub n_sigma2_sq: f64,
    /// `N sigma_Y^2 = D(r) - D'(r)^2 r / D'(0)`
    pub n_sigma_y_sq: f64,
    /// `D'(r)`
    pub dp: f64,
}

struct Reduced {
    /// `Q / r^2`
    q: f64,
    /// `(D'(r) - D'(0)) / r`
    a: f64,
    dpp: f64,
    /// numerators of `n_sigma1_sq * q` and `n_sigma2_sq * q`
    s1: f64,
    s2: f64,
}

fn exact(c: &Correlator, r: f64) -> (Reduced, f64, f64) {
    let (d, dp, dpp) = c.jet2(r);
    let (d1, d2) = (c.dp0(), c.dpp0());
    let big_q = d - dp * dp * r / d1;
    let q = big_q / (r * r);
    let a = (dp - d1) / r;
    let sum = 2.0 * dpp + a;
    let red = Reduced {
        q,
        a,
        dpp,
        s1: -4.0 * d2 * q - sum * 2.0 * dpp,
        s2: -2.0 * d2 * q - sum * a,
    };
    (red, big_q, dp)
}

fn taylor(c: &Correlator, r: f64) -> (Reduced, f64, f64) {
    let (d1, d2, d3) = (c.dp0(), c.dpp0(), c.dppp0());
    let q0 = -1.5 * d2;
    let q = q0 - r * (5.0 / 6.0 * d3 + d2 * d2 / d1);
    let a = d2 + 0.5 * r * d3;
    let dpp = d2 + r * d3;
    let red = Reduced {
        q,
        a,
        dpp,
        // the order-zero parts cancel exactly
        s1: r * (-23.0 / 3.0 * d2 * d3 + 4.0 * d2 * d2 * d2 / d1),
        s2: r * (-7.0 / 3.0 * d2 * d3 + 2.0 * d2 * d2 * d2 / d1),
    };
    let dp = d1 + r * d2 + 0.5 * r * r * d3;
    (red, q * r * r, dp)
}

fn assemble(rho: f64, red: &Reduced, big_q: f64, dp: f64) -> Shape {
    let sq = red.q.sqrt();
    Shape {
        rho,
        alpha_rho_sq: 2.0 * red.dpp / sq,
        frak_t: red.a / sq,
        n_sigma1_sq: red.s1 / red.q,
        n_sigma2_sq: red.s2 / red.q,
        n_sigma_y_sq: big_q,
        dp,
    }
}

/// Blend weight of the exact branch: 0 below `lo`, 1 above `10 lo`.
fn exact_weight(rho: f64, lo: f64) -> f64 {
    ((rho / lo).log10()).clamp(0.0, 1.0)
}

/// Shape coefficients at radius `rho > 0`.
///
/// The variances `n_sigma{1,2}_sq` lose two more orders of magnitude to
/// cancellation than the shape coefficients, so they switch one decade later.
pub fn shape(c: &Correlator, rho: f64) -> Shape {
    let r = rho * rho;
    let w = exact_weight(rho, RHO_TAYLOR);
    let wv = exact_weight(rho, RHO_SWITCH);
    if wv == 1.0 {
        let (red, q, dp) = exact(c, r);
        return assemble(rho, &red, q, dp);
    }
    let (t, tq, tdp) = taylor(c, r);
    let low = assemble(rho, &t, tq, tdp);
    if w == 0.0 {
        return low;
    }
    let (e, eq, edp) = exact(c, r);
    let high = assemble(rho, &e, eq, edp);
    let mix = |w: f64, a: f64, b: f64| if w == 0.0 { a } else { (1.0 - w) * a + w * b };
    Shape {
        rho,
        alpha_rho_sq: mix(w, low.alpha_rho_sq, high.alpha_rho_sq),
        frak_t: mix(w, low.frak_t, high.frak_t),
        n_sigma1_sq: mix(wv, low.n_sigma1_sq, high.n_sigma1_sq),
        n_sigma2_sq: mix(wv, low.n_sigma2_sq, high.n_sigma2_sq),
        n_sigma_y_sq: mix(w, low.n_sigma_y_sq, high.n_sigma_y_sq),
        dp: mix(w, low.dp, high.dp),
    }
}

/// Every `rho`- and `mu`-dependent scalar of the conditional law (N-free).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandscapeParams {
    pub rho: f64,
    pub mu: f64,
    pub alpha: f64,
    pub frak_t: f64,
    pub n_sigma1_sq: f64,
    pub n_sigma2_sq: f64,
    pub m_y: f64,
    pub n_sigma_y_sq: f64,
    pub dpp0: f64,
    pub dp0: f64,
}

impl LandscapeParams {
    /// `alpha rho^2`
    pub fn alpha_rho_sq(&self) -> f64 {
        self.alpha * self.rho * self.rho
    }

    /// `alpha t rho^2 >= 0`
    pub fn alpha_t_rho_sq(&self) -> f64 {
        self.alpha_rho_sq() * self.frak_t
    }

    /// `sqrt(N sigma_Y^2)`
    pub fn sigma_y(&self) -> f64 {
        self.n_sigma_y_sq.sqrt()
    }
}

/// Conditional means of the two Hessian diagonal blocks given `H/N = u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalMeans {
    pub m1: f64,
    pub m2: f64,
    pub v: f64,
}

/// Builds [`LandscapeParams`], failing if either Assumption IV inequality is
/// not strict at this radius.
pub fn landscape_params(c: &Correlator, mu: f64, rho: f64) -> Result<LandscapeParams> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Domain(format!("rho must be positive and finite, got {rho}")));
    }
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    let s = shape(c, rho);
    if !(s.n_sigma2_sq > 0.0) {
        return Err(Error::AssumptionIv { inequality: "asmp1", rho, slack: s.n_sigma2_sq });
    }
    if !(s.n_sigma1_sq > 0.0) {
        return Err(Error::AssumptionIv { inequality: "asmp2", rho, slack: s.n_sigma1_sq });
    }
    let dp0 = c.dp0();
    let r = rho * rho;
    Ok(LandscapeParams {
        rho,
        mu,
        alpha: s.alpha_rho_sq / r,
        frak_t: s.frak_t,
        n_sigma1_sq: s.n_sigma1_sq,
        n_sigma2_sq: s.n_sigma2_sq,
        m_y: mu * r * (0.5 - s.dp / dp0),
        n_sigma_y_sq: s.n_sigma_y_sq,
        dpp0: c.dpp0(),
        dp0,
    })
}

/// `v = (u - m_Y) / sigma_Y`, `m1 = mu + v (alpha rho^2 + t)`, `m2 = mu + v t`.
pub fn conditional_means(p: &LandscapeParams, u: f64) -> ConditionalMeans {
    let v = (u - p.m_y) / p.sigma_y();
    ConditionalMeans {
        m1: p.mu + v * (p.alpha_rho_sq() + p.frak_t),
        m2: p.mu + v * p.frak_t,
        v,
    }
}

/// Inverse of the `u -> v` map.
pub fn u_of_v(p: &LandscapeParams, v: f64) -> f64 {
    p.m_y + v * p.sigma_y()
}
