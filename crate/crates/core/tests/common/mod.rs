#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use gauss_quad::legendre::GaussLegendre;
use landscape::correlator::{Atom, Correlator};

pub fn log1() -> Correlator {
    Correlator::log(1.0).unwrap()
}

/// `D(r) = 1 - exp(-r)`.
pub fn one_atom() -> Correlator {
    Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap()
}

/// `int_a^b f` with nodes graded geometrically towards `a`, for integrands
/// with an integrable singularity at `a`.
fn graded(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let rule = GaussLegendre::new(24).unwrap();
    let mut total = 0.0;
    let mut hi = b;
    for _ in 0..60 {
        let lo = a + 0.5 * (hi - a);
        total += rule.integrate(lo, hi, f);
        hi = lo;
    }
    total
}

/// `int log|x - t| sigma_sc(dt)` by direct quadrature in `t = sqrt 2 sin theta`,
/// split at the singular angle.
pub fn log_potential_quadrature(x: f64) -> f64 {
    let f = |th: f64| (x - SQRT_2 * th.sin()).abs().ln() * 2.0 / PI * th.cos().powi(2);
    if x.abs() < SQRT_2 {
        let s = (x / SQRT_2).asin();
        graded(&f, s, FRAC_PI_2) + graded(&|t| f(2.0 * s - t), s, 2.0 * s + FRAC_PI_2)
    } else {
        let rule = GaussLegendre::new(64).unwrap();
        let k = 16;
        let h = PI / k as f64;
        (0..k).map(|i| rule.integrate(-FRAC_PI_2 + i as f64 * h, -FRAC_PI_2 + (i + 1) as f64 * h, f)).sum()
    }
}

/// `int_x^{-sqrt 2} sqrt(z^2 - 2) dz` by quadrature, graded towards the edge.
pub fn j1_quadrature(x: f64) -> f64 {
    graded(&|z: f64| (z * z - 2.0).max(0.0).sqrt(), -SQRT_2, x).abs()
}
