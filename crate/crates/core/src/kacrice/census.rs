use serde::{Deserialize, Serialize};

use super::field::FieldSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusOptions {
    /// Grid cells per axis over the bounding box of the shell.
    pub grid_density: usize,
    /// Convergence threshold on `|grad H|`.
    pub newton_tol: f64,
    /// Merge radius for roots; `None` means `1e-5` times the box diameter.
    pub dedup_radius: Option<f64>,
    pub max_newton_iters: usize,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self { grid_density: 64, newton_tol: 1e-10, dedup_radius: None, max_newton_iters: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    /// `H(x) / N`
    pub u: f64,
    pub gradient_norm: f64,
    /// `|x| / sqrt(N)`
    pub rho: f64,
    /// Within `newton_tol` of a shell or energy boundary.
    pub boundary: bool,
    /// Strictly inside the shell and the energy window.
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointCensus {
    /// Every distinct root in the closed shell, sorted lexicographically.
    pub points: Vec<CriticalPoint>,
    pub count_in: usize,
    pub flagged: usize,
    pub seeds: usize,
    pub discarded_seeds: usize,
}

/// Counts critical points of `f` with `R1 < |x|/sqrt(N) < R2` and `H/N` in
/// `(e_lo, e_hi)`.
///
/// Newton's method on `grad H` is started from the centre of every grid cell
/// whose corner gradients admit a root (each component attains both signs),
/// together with the neighbours of such cells. A root at the origin counts
/// when `R1 = 0`.
pub fn count_critical_points(
    f: &FieldSample,
    e_lo: f64,
    e_hi: f64,
    r1: f64,
    r2: f64,
    opts: &CensusOptions,
) -> Result<CriticalPointCensus> {
    if !(r2.is_finite() && r1 >= 0.0 && r2 > r1) {
        return Err(Error::Domain(format!("census needs 0 <= R1 < R2 < inf, got ({r1}, {r2})")));
    }
    if opts.grid_density == 0 {
        return Err(Error::Domain("census needs at least one grid cell".into()));
    }
    if e_lo.is_nan() || e_hi.is_nan() || e_lo >= e_hi {
        return Err(Error::EmptyFeasible(format!("energy window ({e_lo}, {e_hi})")));
    }
    let n = f.dim();
    let sn = (n as f64).sqrt();
    let (inner, outer) = (r1 * sn, r2 * sn);
    let cells = opts.grid_density;
    let h = 2.0 * outer / cells as f64;
    let axis: Vec<f64> = (0..=cells).map(|i| -outer + i as f64 * h).collect();
    let diameter = 2.0 * outer * sn;
    let dedup = opts.dedup_radius.unwrap_or(1e-5 * diameter);

    let grid = f.gradient_grid(&axis);
    let p = cells + 1;
    let total_cells = cells.pow(n as u32);
    let corner = |cell: &[usize], off: usize| -> usize {
        cell.iter().enumerate().fold(0, |k, (b, &c)| k * p + c + ((off >> b) & 1))
    };
    let mut cell = vec![0usize; n];
    let mut hit = vec![false; total_cells];
    for (id, slot) in hit.iter_mut().enumerate() {
        decode(id, cells, &mut cell);
        if !cell_meets_shell(&cell, &axis, h, inner, outer) {
            continue;
        }
        *slot = (0..n).all(|b| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for off in 0..(1 << n) {
                let g = grid[corner(&cell, off) * n + b];
                lo = lo.min(g);
                hi = hi.max(g);
            }
            lo <= 0.0 && hi >= 0.0
        });
    }
    let mut seeds_at = vec![false; total_cells];
    for id in (0..total_cells).filter(|&i| hit[i]) {
        decode(id, cells, &mut cell);
        for off in 0..3usize.pow(n as u32) {
            let mut nb = 0;
            let mut ok = true;
            let mut o = off;
            for &c in &cell {
                let d = (o % 3) as isize - 1;
                o /= 3;
                let v = c as isize + d;
                if v < 0 || v >= cells as isize {
                    ok = false;
                    break;
                }
                nb = nb * cells + v as usize;
            }
            if ok {
                seeds_at[nb] = true;
            }
        }
    }

    let mut roots: Vec<Vec<f64>> = Vec::new();
    let (mut seeds, mut discarded) = (0, 0);
    for id in (0..total_cells).filter(|&i| seeds_at[i]) {
        decode(id, cells, &mut cell);
        if !cell_meets_shell(&cell, &axis, h, inner, outer) {
            continue;
        }
        seeds += 1;
        let start: Vec<f64> = cell.iter().map(|&c| axis[c] + 0.5 * h).collect();
        match newton(f, start, opts, 2.0 * outer + h) {
            Some(x) if !roots.iter().any(|r| dist(r, &x) < dedup) => roots.push(x),
            Some(_) => {}
            None => discarded += 1,
        }
    }

    let nf = n as f64;
    let tol = opts.newton_tol;
    let mut points: Vec<CriticalPoint> = roots
        .into_iter()
        .filter_map(|x| {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > outer + tol || norm < inner - tol {
                return None;
            }
            let u = f.value(&x) / nf;
            if u < e_lo - tol || u > e_hi + tol {
                return None;
            }
            let near = |a: f64, b: f64| b.is_finite() && (a - b).abs() <= tol;
            let origin_ok = r1 == 0.0 && norm == 0.0;
            let boundary = (near(norm, inner) && !origin_ok)
                || near(norm, outer)
                || near(u, e_lo)
                || near(u, e_hi);
            let inside = !boundary && (norm > inner || origin_ok) && norm < outer && u > e_lo && u < e_hi;
            Some(CriticalPoint {
                gradient_norm: f.gradient(&x).norm(),
                rho: norm / nf.sqrt(),
                u,
                x,
                boundary,
                inside,
            })
        })
        .collect();
    points.sort_by(|a, b| a.x.partial_cmp(&b.x).expect("finite roots"));
    Ok(CriticalPointCensus {
        count_in: points.iter().filter(|p| p.inside).count(),
        flagged: points.iter().filter(|p| p.boundary).count(),
        points,
        seeds,
        discarded_seeds: discarded,
    })
}

fn decode(mut id: usize, cells: usize, out: &mut [usize]) {
    for c in out.iter_mut().rev() {
        *c = id % cells;
        id /= cells;
    }
}

/// Whether the closed cell intersects the closed shell `inner <= |x| <= outer`.
fn cell_meets_shell(cell: &[usize], axis: &[f64], h: f64, inner: f64, outer: f64) -> bool {
    let (mut near, mut far) = (0.0, 0.0);
    for &c in cell {
        let (lo, hi) = (axis[c], axis[c] + h);
        let n = if lo > 0.0 { lo } else if hi < 0.0 { -hi } else { 0.0 };
        let f = lo.abs().max(hi.abs());
        near += n * n;
        far += f * f;
    }
    near.sqrt() <= outer && far.sqrt() >= inner
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn newton(f: &FieldSample, mut x: Vec<f64>, opts: &CensusOptions, bound: f64) -> Option<Vec<f64>> {
    for _ in 0..opts.max_newton_iters {
        let (g, h) = f.gradient_hessian(&x);
        if !g.iter().all(|v| v.is_finite()) {
            return None;
        }
        if g.norm() <= opts.newton_tol {
            return Some(x);
        }
        let step = h.lu().solve(&g)?;
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi -= s;
        }
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() > bound {
            return None;
        }
    }
    (f.gradient(&x).norm() <= opts.newton_tol).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::{Atom, Correlator};
    use crate::kacrice::field::sample_field;

    #[test]
    fn quadratic_has_one_root_at_the_origin() {
        let c = Correlator::atomic(vec![], 0.0).unwrap();
        for dim in [2, 3] {
            let f = sample_field(&c, 1.0, dim, 256, 0).unwrap();
            let opts = CensusOptions { grid_density: 16, ..Default::default() };
            let s = count_critical_points(&f, f64::NEG_INFINITY, f64::INFINITY, 0.0, 3.0, &opts).unwrap();
            assert_eq!(s.count_in, 1);
            assert!(s.points[0].x.iter().all(|v| v.abs() < 1e-12));
            assert_eq!(s.points[0].u, 0.0);
            let shell = count_critical_points(&f, f64::NEG_INFINITY, f64::INFINITY, 0.5, 3.0, &opts).unwrap();
            assert_eq!(shell.count_in, 0);
        }
    }

    #[test]
    fn roots_are_converged_and_separated() {
        let c = Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap();
        let f = sample_field(&c, 0.3, 2, 512, 4).unwrap();
        let opts = CensusOptions::default();
        let s = count_critical_points(&f, f64::NEG_INFINITY, f64::INFINITY, 0.0, 3.0, &opts).unwrap();
        assert!(s.count_in >= 1);
        for (i, p) in s.points.iter().enumerate() {
            assert!(p.gradient_norm <= opts.newton_tol);
            for q in &s.points[i + 1..] {
                assert!(dist(&p.x, &q.x) >= 1e-5 * 2.0 * 3.0 * 2.0);
            }
        }
    }

    #[test]
    fn energy_window_filters() {
        let c = Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap();
        let f = sample_field(&c, 0.3, 2, 512, 4).unwrap();
        let opts = CensusOptions::default();
        let all = count_critical_points(&f, f64::NEG_INFINITY, f64::INFINITY, 0.0, 3.0, &opts).unwrap();
        let low = count_critical_points(&f, f64::NEG_INFINITY, 0.0, 0.0, 3.0, &opts).unwrap();
        let high = count_critical_points(&f, 0.0, f64::INFINITY, 0.0, 3.0, &opts).unwrap();
        assert_eq!(low.count_in + high.count_in, all.count_in);
    }

    #[test]
    fn reflected_field_has_the_same_census() {
        let c = Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap();
        let f = sample_field(&c, 0.5, 2, 512, 8).unwrap();
        let opts = CensusOptions::default();
        let a = count_critical_points(&f, f64::NEG_INFINITY, f64::INFINITY, 0.0, 3.0, &opts).unwrap();
        let b = count_critical_points(&f.reflected(), f64::NEG_INFINITY, f64::INFINITY, 0.0, 3.0, &opts).unwrap();
        assert_eq!(a.count_in, b.count_in);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!(dist(&p.x, &q.x) < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = Correlator::atomic(vec![], 0.0).unwrap();
        let f = sample_field(&c, 1.0, 2, 256, 0).unwrap();
        let zero = CensusOptions { grid_density: 0, ..Default::default() };
        assert!(matches!(
            count_critical_points(&f, f64::NEG_INFINITY, f64::INFINITY, 0.0, 3.0, &zero),
            Err(Error::Domain(_))
        ));
        let d = CensusOptions::default();
        assert!(count_critical_points(&f, f64::NEG_INFINITY, f64::INFINITY, 0.0, f64::INFINITY, &d).is_err());
    }
}
