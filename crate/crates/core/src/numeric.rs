//! Small numerical helpers shared by the optimizer, the integrators and the samplers.

use gauss_quad::legendre::GaussLegendre;

const INV_GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Maximizes `f` on `[a, b]` with Brent's method (golden section with
/// parabolic steps). Returns `(argmax, max)`. The endpoints themselves are
/// never probed; callers that care about boundary maxima compare against them.
pub fn brent_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x = lo + INV_GOLDEN * (hi - lo);
    let (mut w, mut v) = (x, x);
    let mut fx = -f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let xm = 0.5 * (lo + hi);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (lo - x) && p < q * (hi - x) {
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { lo - x } else { hi - x };
            d = INV_GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = -f(u);
        if fu <= fx {
            if u >= x {
                lo = x;
            } else {
                hi = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, -fx)
}

/// Like [`brent_max`] but also compares the two endpoints, so maxima on the
/// boundary of a closed interval are located exactly.
pub fn maximize_closed<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if a == b {
        return (a, f(a));
    }
    let (mut best_x, mut best) = brent_max(&mut f, a, b, tol);
    for edge in [a, b] {
        let fe = f(edge);
        if fe > best {
            best = fe;
            best_x = edge;
        }
    }
    (best_x, best)
}

/// `log(sum(exp(x)))`, returning `-inf` for an empty or all `-inf` slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln Γ(k/2)` for a positive integer `k`, by the exact half-integer recurrence.
pub fn ln_gamma_half(k: usize) -> f64 {
    assert!(k > 0, "ln_gamma_half needs k >= 1");
    let mut acc = if k.is_multiple_of(2) { 0.0 } else { 0.5 * std::f64::consts::PI.ln() };
    let mut z: f64 = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while (2.0 * z) as usize != k {
        acc += z.ln();
        z += 1.0;
    }
    acc
}

/// `ln` of the surface area of the unit sphere in `R^n`, `2 π^{n/2} / Γ(n/2)`.
pub fn ln_sphere_area(n: usize) -> f64 {
    std::f64::consts::LN_2 + 0.5 * n as f64 * std::f64::consts::PI.ln() - ln_gamma_half(n)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels and
/// `order` nodes per panel.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(order.max(2)).expect("Gauss-Legendre order >= 2");
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.iter() {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// `n` points spaced evenly on a log scale between `lo` and `hi` (both positive),
/// with both endpoints exact.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `n` evenly spaced points between `lo` and `hi`, with both endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}
