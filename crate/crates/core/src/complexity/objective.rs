use std::f64::consts::{LN_2, SQRT_2};

use crate::correlator::Correlator;
use crate::error::Result;
use crate::geometry::{conditional_means, landscape_params, LandscapeParams};
use crate::numeric::maximize_closed;
use crate::rmt::{rate_function_j1, semicircle_log_potential};

/// `d/dx Psi*(x)`: `x` inside the bulk, `x - sign(x) sqrt(x^2 - 2)` outside.
fn d_log_potential(x: f64) -> f64 {
    if x.abs() <= SQRT_2 {
        x
    } else {
        x - (x * x - 2.0).sqrt().copysign(x)
    }
}

/// `psi*` restricted to one radius, with the radius-only terms precomputed.
#[derive(Debug, Clone)]
pub(crate) struct Slice {
    pub p: LandscapeParams,
    /// `-2D''(0) / (-2D''(0) - t^2)`, at least 1
    k: f64,
    /// `sqrt(-4 D''(0))`
    s4: f64,
    /// `-mu^2 rho^2 / (2 D'(0)) + log rho`
    radial: f64,
}

impl Slice {
    pub fn new(c: &Correlator, mu: f64, rho: f64) -> Result<Self> {
        let p = landscape_params(c, mu, rho)?;
        let j2 = -2.0 * p.dpp0;
        Ok(Self {
            k: j2 / (j2 - p.frak_t * p.frak_t),
            s4: (2.0 * j2).sqrt(),
            radial: -mu * mu * rho * rho / (2.0 * p.dp0) + rho.ln(),
            p,
        })
    }

    /// Centre of the `y` quadratic: `-m2 / sqrt(-4 D''(0))`.
    fn y_centre(&self, u: f64) -> f64 {
        -conditional_means(&self.p, u).m2 / self.s4
    }

    pub fn value(&self, u: f64, y: f64) -> f64 {
        let du = u - self.p.m_y;
        let dy = y - self.y_centre(u);
        semicircle_log_potential(y) - du * du / (2.0 * self.p.n_sigma_y_sq) + self.radial
            - self.k * dy * dy
    }

    /// Maximizer over `y` in `[-w, w]`. The objective is strictly concave in
    /// `y`, so this is the root of the derivative, or an endpoint.
    pub fn best_y(&self, u: f64, w: f64) -> (f64, f64) {
        let c = self.y_centre(u);
        let g = |y: f64| d_log_potential(y) - 2.0 * self.k * (y - c);
        let (mut lo, mut hi) = (-w, w);
        let y = if g(lo) <= 0.0 {
            lo
        } else if g(hi) >= 0.0 {
            hi
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        (y, self.value(u, y))
    }

    /// `[m_Y - k sigma_Y, m_Y + k sigma_Y]` intersected with the closure of `E`.
    pub fn u_window(&self, sigmas: f64, e_lo: f64, e_hi: f64) -> Option<(f64, f64)> {
        let half = sigmas * self.p.sigma_y();
        let lo = (self.p.m_y - half).max(e_lo);
        let hi = (self.p.m_y + half).min(e_hi);
        (lo <= hi).then_some((lo, hi))
    }

    /// Maximizer over `u` in `window` (objective concave in `u` after the `y` profile).
    pub fn best_u(&self, window: (f64, f64), w: f64, tol: f64) -> (f64, f64, f64) {
        let (u, _) = maximize_closed(|u| self.best_y(u, w).1, window.0, window.1, tol);
        let (y, v) = self.best_y(u, w);
        (u, y, v)
    }
}

/// `psi*(rho, u, y) = Psi*(y) - (u - m_Y)^2 / (2 N sigma_Y^2) - mu^2 rho^2 / (2 D'(0))
///  + log rho - [-2D''(0) / (-2D''(0) - t^2)] (y + m2 / sqrt(-4 D''(0)))^2`.
pub fn psi_star(c: &Correlator, mu: f64, rho: f64, u: f64, y: f64) -> Result<f64> {
    Ok(Slice::new(c, mu, rho)?.value(u, y))
}

/// `psi*` with `v` (equivalently `u`) maximized out, for `E = R`.
pub fn psi_star_reduced(c: &Correlator, mu: f64, rho: f64, y: f64) -> f64 {
    let j = c.curvature_scale();
    let tail = if y.abs() > SQRT_2 { rate_function_j1(-y.abs()) } else { 0.0 };
    -0.5 * y * y - 0.5 - 0.5 * LN_2 - tail - SQRT_2 * mu * y / j - mu * mu / (2.0 * j * j)
        - mu * mu * rho * rho / (2.0 * c.dp0())
        + rho.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::brent_max;
    use approx::assert_relative_eq;

    fn log1() -> Correlator {
        Correlator::log(1.0).unwrap()
    }

    #[test]
    fn derivative_of_log_potential_matches_differences() {
        for x in [-3.0, -1.5, -0.4, 0.9, 1.414, 1.6, 4.0] {
            let h = 1e-6;
            let fd = (semicircle_log_potential(x + h) - semicircle_log_potential(x - h)) / (2.0 * h);
            assert_relative_eq!(d_log_potential(x), fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn psi_star_at_the_subcritical_optimum() {
        let v = psi_star(&log1(), 1.0, 1.0, -0.25, -1.0).unwrap();
        assert_relative_eq!(v, 0.25 - 1.0 - 0.5 * LN_2, epsilon = 1e-12);
    }

    #[test]
    fn psi_star_at_the_origin_of_u_y() {
        for c in [log1(), Correlator::power(0.5, 1.0).unwrap()] {
            let v = psi_star(&c, 0.0, 1.0, 0.0, 0.0).unwrap();
            assert_relative_eq!(v, -0.5 - 0.5 * LN_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn psi_star_diverges_at_the_edges() {
        let c = log1();
        let far = psi_star(&c, 1.0, 1.0, 0.0, 60.0).unwrap();
        assert!(far < -1e3);
        let near0 = psi_star(&c, 1.0, 1e-9, 0.0, 0.0).unwrap();
        assert!(near0 < -20.0);
    }

    #[test]
    fn reduced_values() {
        assert_relative_eq!(psi_star_reduced(&log1(), 0.0, 1.0, 0.0), -0.5 - 0.5 * LN_2, epsilon = 1e-15);
        assert_relative_eq!(psi_star_reduced(&log1(), 1.0, 1.0, -1.0), -1.096_573_590_279_972_6, epsilon = 1e-12);
    }

    #[test]
    fn reduced_is_the_envelope_over_v() {
        let c = log1();
        let s = Slice::new(&c, 2.0, 0.5).unwrap();
        let y = -1.5;
        let (_, best) = brent_max(|u| s.value(u, y), -20.0, 20.0, 1e-12);
        assert_relative_eq!(best, psi_star_reduced(&c, 2.0, 0.5, y), epsilon = 1e-8);
    }

    #[test]
    fn best_y_solves_the_inner_problem() {
        let s = Slice::new(&log1(), 1.0, 1.0).unwrap();
        let (y, v) = s.best_y(-0.25, 8.0);
        assert_relative_eq!(y, -1.0, epsilon = 1e-10);
        let (_, b) = brent_max(|y| s.value(-0.25, y), -8.0, 8.0, 1e-12);
        assert_relative_eq!(v, b, epsilon = 1e-12);
    }
}
