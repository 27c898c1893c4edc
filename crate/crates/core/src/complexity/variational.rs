use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::Slice;
use super::{BoundaryHit, CriticalLocus, DomainSpec, LocusPoint, Regime};
use crate::correlator::Correlator;
use crate::error::{Error, Result};
use crate::geometry::conditional_means;
use crate::numeric::{linspace, logspace, maximize_closed};

/// Grid sizes, windows and tolerances of [`optimize_psi`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    /// Radii in the coarse grid (half log-spaced, half linear).
    pub grid_rho: usize,
    /// Energies per radius in the coarse grid.
    pub grid_u: usize,
    /// Grid rows polished by the local search.
    pub top_k: usize,
    /// Relative argument tolerance of the line searches.
    pub tol: f64,
    /// Half-width of the `u` window in units of `sigma_Y`.
    pub u_sigmas: f64,
    /// Half-width of the `y` window.
    pub y_half_width: f64,
    /// Smallest radius probed.
    pub rho_floor: f64,
    /// With `R2 = inf` the radius is cut at `rho_span * sqrt(D'(0)) / |mu|`.
    pub rho_span: f64,
    /// Maximizers within this much of the best value count as ties.
    pub tie_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            grid_rho: 96,
            grid_u: 96,
            top_k: 8,
            tol: 1e-8,
            u_sigmas: 8.0,
            y_half_width: 8.0,
            rho_floor: 1e-6,
            rho_span: 8.0,
            tie_tol: 1e-9,
        }
    }
}

struct Search<'a> {
    c: &'a Correlator,
    mu: f64,
    dom: &'a DomainSpec,
    opts: &'a OptimizerOptions,
    u_sigmas: f64,
    y_width: f64,
    rho_lo: f64,
    rho_hi: f64,
}

struct Outcome {
    best: LocusPoint,
    near: Vec<LocusPoint>,
    artificial_edge: bool,
}

impl Search<'_> {
    /// Best `(u, y, psi)` at radius `rho`, or `None` when the `u` window is empty.
    fn profile(&self, slice: &Slice) -> Option<(f64, f64, f64)> {
        let window = slice.u_window(self.u_sigmas, self.dom.e_lo, self.dom.e_hi)?;
        Some(slice.best_u(window, self.y_width, self.opts.tol * 1e-2))
    }

    fn profile_at(&self, rho: f64) -> Option<LocusPoint> {
        let slice = Slice::new(self.c, self.mu, rho).ok()?;
        let (u, y, psi) = self.profile(&slice)?;
        Some(LocusPoint { rho, u, y, psi })
    }

    fn row(&self, rho: f64) -> Result<Option<LocusPoint>> {
        let slice = Slice::new(self.c, self.mu, rho)?;
        let Some((lo, hi)) = slice.u_window(self.u_sigmas, self.dom.e_lo, self.dom.e_hi) else {
            return Ok(None);
        };
        let mut best: Option<LocusPoint> = None;
        for u in linspace(lo, hi, self.opts.grid_u.max(2)) {
            let (y, psi) = slice.best_y(u, self.y_width);
            if best.is_none_or(|b| psi > b.psi) {
                best = Some(LocusPoint { rho, u, y, psi });
            }
        }
        Ok(best)
    }

    fn rho_grid(&self) -> Vec<f64> {
        let n = self.opts.grid_rho.max(4);
        let mut g = logspace(self.rho_lo, self.rho_hi, n / 2);
        g.extend(linspace(self.rho_lo, self.rho_hi, n - n / 2));
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        g
    }

    fn run(&self) -> Result<Outcome> {
        let grid = self.rho_grid();
        let rows: Vec<Option<LocusPoint>> =
            grid.par_iter().map(|&rho| self.row(rho)).collect::<Result<_>>()?;
        let val = |i: usize| rows[i].map_or(f64::NEG_INFINITY, |p| p.psi);

        let mut starts: Vec<usize> = (0..grid.len())
            .filter(|&i| {
                let v = val(i);
                v.is_finite()
                    && (i == 0 || v >= val(i - 1))
                    && (i + 1 == grid.len() || v >= val(i + 1))
            })
            .collect();
        starts.sort_by(|&a, &b| val(b).partial_cmp(&val(a)).unwrap().then(a.cmp(&b)));
        starts.truncate(self.opts.top_k.max(1));
        if starts.is_empty() {
            return Err(Error::EmptyFeasible(format!(
                "no radius in [{}, {}] admits an energy in ({}, {})",
                self.rho_lo, self.rho_hi, self.dom.e_lo, self.dom.e_hi
            )));
        }

        let mut found: Vec<LocusPoint> = starts
            .par_iter()
            .map(|&i| {
                let a = if i == 0 { grid[0] } else { grid[i - 1] };
                let b = if i + 1 == grid.len() { grid[i] } else { grid[i + 1] };
                let f = |rho: f64| self.profile_at(rho).map_or(f64::NEG_INFINITY, |p| p.psi);
                let (rho, _) = maximize_closed(f, a, b, self.opts.tol);
                let polished = self.profile_at(rho);
                match (polished, rows[i]) {
                    (Some(p), Some(g)) if p.psi >= g.psi => p,
                    (_, Some(g)) => g,
                    (Some(p), None) => p,
                    (None, None) => unreachable!("start rows are finite"),
                }
            })
            .collect();

        let top = found.iter().map(|p| p.psi).fold(f64::NEG_INFINITY, f64::max);
        found.retain(|p| p.psi >= top - self.opts.tie_tol);
        found.sort_by(|a, b| {
            a.rho.partial_cmp(&b.rho).unwrap().then(a.u.partial_cmp(&b.u).unwrap())
        });
        found.dedup_by(|a, b| (a.rho - b.rho).abs() + (a.u - b.u).abs() < 1e-6);
        let best = found[0];
        let artificial_edge = self.on_artificial_edge(&best);
        Ok(Outcome { best, near: found, artificial_edge })
    }

    fn on_artificial_edge(&self, p: &LocusPoint) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        if self.dom.r2.is_infinite() && close(p.rho, self.rho_hi) {
            return true;
        }
        if self.dom.r1 < self.opts.rho_floor && close(p.rho, self.rho_lo) {
            return true;
        }
        if p.y.abs() >= self.y_width * (1.0 - 1e-12) {
            return true;
        }
        let Ok(slice) = Slice::new(self.c, self.mu, p.rho) else { return true };
        let half = self.u_sigmas * slice.p.sigma_y();
        let (lo, hi) = (slice.p.m_y - half, slice.p.m_y + half);
        (close(p.u, lo) && lo > self.dom.e_lo) || (close(p.u, hi) && hi < self.dom.e_hi)
    }
}

/// Numerical supremum of `psi*` over `(R1, R2) x E x R`.
///
/// A coarse `(rho, u)` grid (with `y` solved exactly per cell) locates the
/// candidate radii; each of the best `top_k` local maxima is then polished
/// by a line search on the radius profile, itself maximized over `u` and
/// `y`. If the result touches a truncation window rather than a true edge
/// of the domain, the windows are doubled once.
pub fn optimize_psi(
    c: &Correlator,
    mu: f64,
    dom: &DomainSpec,
    opts: &OptimizerOptions,
) -> Result<CriticalLocus> {
    dom.validate(mu)?;
    let mut last = None;
    for scale in [1.0, 2.0] {
        let rho_lo = dom.r1.max(opts.rho_floor);
        let rho_hi = if dom.r2.is_finite() {
            dom.r2
        } else {
            scale * opts.rho_span * (c.dp0().sqrt() / mu.abs()).max(dom.r1)
        };
        if !(rho_lo < rho_hi) {
            return Err(Error::EmptyFeasible(format!("radius window [{rho_lo}, {rho_hi}] is empty")));
        }
        let search = Search {
            c,
            mu,
            dom,
            opts,
            u_sigmas: scale * opts.u_sigmas,
            y_width: scale * opts.y_half_width,
            rho_lo,
            rho_hi,
        };
        let out = search.run()?;
        if !out.artificial_edge {
            return locus(c, mu, dom, out);
        }
        last = Some(out.best.psi);
    }
    Err(Error::NonConvergence { iters: 2, best_value: last.unwrap_or(f64::NEG_INFINITY) })
}

fn locus(c: &Correlator, mu: f64, dom: &DomainSpec, out: Outcome) -> Result<CriticalLocus> {
    let b = out.best;
    let slice = Slice::new(c, mu, b.rho)?;
    let on = |x: f64, edge: f64| edge.is_finite() && (x - edge).abs() <= 1e-9 * edge.abs().max(1.0);
    Ok(CriticalLocus {
        rho_star: b.rho,
        u_star: b.u,
        y_star: b.y,
        v_star: conditional_means(&slice.p, b.u).v,
        psi_value: b.psi,
        regime: Regime::of(c, mu),
        boundary_hit: BoundaryHit {
            rho: (dom.r1 > 0.0 && on(b.rho, dom.r1)) || on(b.rho, dom.r2),
            u: on(b.u, dom.e_lo) || on(b.u, dom.e_hi),
        },
        near_optima: out.near,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::{closed_form_optimum, psi_star};
    use approx::assert_relative_eq;

    fn log1() -> Correlator {
        Correlator::log(1.0).unwrap()
    }

    #[test]
    fn matches_closed_form_for_log() {
        let c = log1();
        for mu in [0.5, 1.0, 2.0, -1.2] {
            let num = optimize_psi(&c, mu, &DomainSpec::full(), &OptimizerOptions::default()).unwrap();
            let cf = closed_form_optimum(&c, mu, 0.0, f64::INFINITY).unwrap();
            assert!((num.psi_value - cf.psi_value).abs() <= 1e-6, "{mu}");
            assert!((num.rho_star - cf.rho_star).abs() <= 1e-4);
            assert!((num.u_star - cf.u_star).abs() <= 1e-4);
            assert!((num.y_star - cf.y_star).abs() <= 1e-4);
        }
    }

    #[test]
    fn energy_cap_pins_u_to_the_boundary() {
        let c = log1();
        let dom = DomainSpec::full().with_energy(f64::NEG_INFINITY, -0.5);
        let l = optimize_psi(&c, 1.0, &dom, &OptimizerOptions::default()).unwrap();
        assert_eq!(l.u_star, -0.5);
        assert!(l.boundary_hit.u);
        assert!(l.psi_value < -1.096_573_590_279_972_6);
        // dense oracle on the boundary slice
        let mut best = f64::NEG_INFINITY;
        for i in 1..=400 {
            let rho = 0.01 * i as f64;
            for j in 0..=400 {
                let y = -4.0 + 0.01 * j as f64;
                best = best.max(psi_star(&c, 1.0, rho, -0.5, y).unwrap());
            }
        }
        assert!(l.psi_value >= best - 1e-6);
        assert!(l.psi_value - best < 1e-3);
    }

    #[test]
    fn zero_mu_finite_shell() {
        let l = optimize_psi(&log1(), 0.0, &DomainSpec::shell(0.0, 2.0), &OptimizerOptions::default())
            .unwrap();
        assert_relative_eq!(l.rho_star, 2.0);
        assert!(l.u_star.abs() < 1e-4 && l.y_star.abs() < 1e-4);
        assert!(l.boundary_hit.rho);
        assert_eq!(l.regime, Regime::ZeroMu);
    }

    #[test]
    fn clamped_shell_matches_closed_form() {
        let c = log1();
        for (mu, r2) in [(1.0, 0.5), (2.0, 0.3)] {
            let l = optimize_psi(&c, mu, &DomainSpec::shell(0.0, r2), &OptimizerOptions::default())
                .unwrap();
            let cf = closed_form_optimum(&c, mu, 0.0, r2).unwrap();
            assert_eq!(l.rho_star, r2);
            assert_relative_eq!(l.psi_value, cf.psi_value, epsilon = 1e-8);
        }
    }

    #[test]
    fn empty_energy_window_is_reported() {
        let dom = DomainSpec::shell(0.0, 1.0).with_energy(50.0, 60.0);
        let e = optimize_psi(&log1(), 1.0, &dom, &OptimizerOptions::default()).unwrap_err();
        assert!(matches!(e, Error::EmptyFeasible(_)));
    }
}
