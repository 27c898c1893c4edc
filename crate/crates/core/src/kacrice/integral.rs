use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::DomainSpec;
use crate::correlator::Correlator;
use crate::error::{Error, Result};
use crate::geometry::landscape_params;
use crate::hessian::{sample_draws, summarize_log_dets, ConditionalHessianModel, HessianDraw};
use crate::numeric::{composite_gauss_legendre, ln_sphere_area, logsumexp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KacRiceOptions {
    /// Hessian draws shared by every quadrature node.
    pub goe_samples: usize,
    pub rho_panels: usize,
    pub u_panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub quad_nodes: usize,
    /// Half-width of the `u` window in conditional standard deviations.
    pub u_sigmas: f64,
    /// Extent of the `rho` window past its peak, in units of `sqrt(D'(0))/(|mu| sqrt N)`.
    pub rho_sigmas: f64,
    pub rho_floor: f64,
    /// Boundary mass fraction above which the result is flagged.
    pub boundary_tol: f64,
}

impl Default for KacRiceOptions {
    fn default() -> Self {
        Self {
            goe_samples: 4000,
            rho_panels: 24,
            u_panels: 24,
            quad_nodes: 8,
            u_sigmas: 12.0,
            rho_sigmas: 8.0,
            rho_floor: 1e-4,
            boundary_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KacRiceResult {
    pub n: usize,
    /// `E Crt_N`; may overflow, see `log_estimate`.
    pub estimate: f64,
    pub stderr: f64,
    pub log_estimate: f64,
    /// `log_estimate / N`
    pub per_dimension: f64,
    pub rho_window: (f64, f64),
    /// Share of the integral in the panels next to truncated window edges.
    pub boundary_mass: f64,
    pub boundary_warning: bool,
    pub nodes: usize,
    pub draws: usize,
}

struct Node {
    model: ConditionalHessianModel,
    log_weight: f64,
    /// Log weight of this node in the estimate of the mass cut off by the
    /// window, if it sits next to a truncated edge.
    edge: Option<f64>,
}

/// Expected number of critical points in the shell with `H/N` in `E`:
///
/// ```text
/// S_{N-1} N^{N/2} int int E|det G| phi(u; m_Y, sigma_Y^2) (2 pi D'(0))^{-N/2}
///     exp(-N mu^2 rho^2 / (2 D'(0))) rho^{N-1} du drho
/// ```
///
/// with `E|det G|` averaged over draws shared across all nodes. The standard
/// error comes from the spread of the per-draw integrals.
pub fn kac_rice_integral(
    c: &Correlator,
    mu: f64,
    dom: &DomainSpec,
    n: usize,
    opts: &KacRiceOptions,
    seed: u64,
) -> Result<KacRiceResult> {
    if n < 2 {
        return Err(Error::Domain(format!("Kac-Rice needs N >= 2, got {n}")));
    }
    if opts.goe_samples == 0 || opts.rho_panels == 0 || opts.u_panels == 0 || opts.quad_nodes < 2 {
        return Err(Error::InvalidParameter("empty Monte Carlo or quadrature budget".into()));
    }
    dom.validate(mu)?;
    let nodes = build_nodes(c, mu, dom, n, opts)?;
    let draws = sample_draws(n, opts.goe_samples, seed);
    let rows: Vec<(f64, f64)> = draws.par_iter().map(|d| per_draw(&nodes, d)).collect();
    let totals: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, 1.0)).collect();
    let est = summarize_log_dets(&totals);
    let edge_logs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let boundary_mass = (logsumexp(&edge_logs) - logsumexp(&totals.iter().map(|t| t.0).collect::<Vec<_>>())).exp();
    let (lo, hi) = rho_window(c, mu, dom, n, opts)?;
    Ok(KacRiceResult {
        n,
        estimate: est.estimate,
        stderr: est.stderr,
        log_estimate: est.log_estimate,
        per_dimension: est.log_estimate / n as f64,
        rho_window: (lo, hi),
        boundary_warning: boundary_mass > opts.boundary_tol,
        boundary_mass,
        nodes: nodes.len(),
        draws: draws.len(),
    })
}

/// `(log integral, log edge integral)` for one draw.
fn per_draw(nodes: &[Node], d: &HessianDraw) -> (f64, f64) {
    let mut all = Vec::with_capacity(nodes.len());
    let mut edge = Vec::new();
    for node in nodes {
        let v = node.log_weight + node.model.log_abs_det(d).0;
        all.push(v);
        if let Some(w) = node.edge {
            edge.push(v - node.log_weight + w);
        }
    }
    (logsumexp(&all), logsumexp(&edge))
}

fn rho_window(c: &Correlator, mu: f64, dom: &DomainSpec, n: usize, opts: &KacRiceOptions) -> Result<(f64, f64)> {
    let lo = dom.r1.max(opts.rho_floor);
    let hi = if mu == 0.0 {
        dom.r2
    } else {
        let width = c.dp0().sqrt() / mu.abs();
        let peak = width.clamp(dom.r1, dom.r2);
        dom.r2.min(peak + opts.rho_sigmas * width / (n as f64).sqrt())
    };
    if !(hi.is_finite() && hi > lo) {
        return Err(Error::Domain(format!("empty radial window ({lo}, {hi})")));
    }
    Ok((lo, hi))
}

fn build_nodes(c: &Correlator, mu: f64, dom: &DomainSpec, n: usize, opts: &KacRiceOptions) -> Result<Vec<Node>> {
    let nf = n as f64;
    let (lo, hi) = rho_window(c, mu, dom, n, opts)?;
    let dp0 = c.dp0();
    let constant = ln_sphere_area(n) + 0.5 * nf * nf.ln() - 0.5 * nf * (2.0 * PI * dp0).ln();
    let q = opts.quad_nodes;
    let rho_rule = composite_gauss_legendre(lo, hi, opts.rho_panels, q);
    // near the floor the integrand grows like rho^{N-1}, so the cut-off part
    // is about f(lo) lo / N, extrapolated from the first node
    let first = rho_rule[0].0;
    let floor_weight = (lo > dom.r1).then(|| (lo / nf).ln() + (nf - 1.0) * (lo / first).ln());
    let last_panel = |i: usize| hi < dom.r2 && i / q + 1 == opts.rho_panels;
    let mut nodes = Vec::new();
    for (i, &(rho, wr)) in rho_rule.iter().enumerate() {
        let p = landscape_params(c, mu, rho)?;
        let sd = (p.n_sigma_y_sq / nf).sqrt();
        let (ulo_t, uhi_t) = (p.m_y - opts.u_sigmas * sd, p.m_y + opts.u_sigmas * sd);
        let (ulo, uhi) = (ulo_t.max(dom.e_lo), uhi_t.min(dom.e_hi));
        if ulo >= uhi {
            continue;
        }
        let density = constant + (nf - 1.0) * rho.ln() - nf * mu * mu * rho * rho / (2.0 * dp0);
        let radial = density + wr.ln();
        let u_rule = composite_gauss_legendre(ulo, uhi, opts.u_panels, q);
        for (k, &(u, wu)) in u_rule.iter().enumerate() {
            let z = (u - p.m_y) / sd;
            let log_density = -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln();
            let panel = k / q;
            let log_weight = radial + log_density + wu.ln();
            let u_edge = (panel == 0 && ulo == ulo_t) || (panel + 1 == opts.u_panels && uhi == uhi_t);
            let edge = match floor_weight {
                Some(fw) if i == 0 => Some(density + fw + log_density + wu.ln()),
                _ if u_edge || last_panel(i) => Some(log_weight),
                _ => None,
            };
            nodes.push(Node { model: ConditionalHessianModel::from_params(p, u, n)?, log_weight, edge });
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyFeasible("no quadrature nodes inside the energy window".into()));
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::Atom;

    fn one_atom() -> Correlator {
        Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap()
    }

    fn quick() -> KacRiceOptions {
        KacRiceOptions { goe_samples: 400, rho_panels: 12, u_panels: 8, ..Default::default() }
    }

    #[test]
    fn quadratic_dominated_landscape_has_one_point() {
        let r = kac_rice_integral(&one_atom(), 10.0, &DomainSpec::shell(0.0, 3.0), 2, &quick(), 1).unwrap();
        assert!((r.estimate - 1.0).abs() < 0.05, "{r:?}");
        assert!(r.boundary_mass < 1e-3, "{r:?}");
    }

    #[test]
    fn energy_windows_add_up() {
        let c = one_atom();
        let o = quick();
        let all = kac_rice_integral(&c, 1.0, &DomainSpec::shell(0.0, 3.0), 2, &o, 3).unwrap();
        let low = kac_rice_integral(&c, 1.0, &DomainSpec::shell(0.0, 3.0).with_energy(f64::NEG_INFINITY, -0.2), 2, &o, 3).unwrap();
        let high = kac_rice_integral(&c, 1.0, &DomainSpec::shell(0.0, 3.0).with_energy(-0.2, f64::INFINITY), 2, &o, 3).unwrap();
        let sum = low.estimate + high.estimate;
        assert!((sum - all.estimate).abs() < 0.02 * all.estimate, "{} vs {}", sum, all.estimate);
    }

    #[test]
    fn deterministic_in_the_seed() {
        let c = one_atom();
        let a = kac_rice_integral(&c, 1.0, &DomainSpec::shell(0.0, 3.0), 3, &quick(), 7).unwrap();
        let b = kac_rice_integral(&c, 1.0, &DomainSpec::shell(0.0, 3.0), 3, &quick(), 7).unwrap();
        assert_eq!(a.log_estimate, b.log_estimate);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn narrow_window_raises_the_warning() {
        let o = KacRiceOptions { u_sigmas: 1.0, ..quick() };
        let r = kac_rice_integral(&one_atom(), 1.0, &DomainSpec::shell(0.0, 3.0), 2, &o, 1).unwrap();
        assert!(r.boundary_warning);
    }

    #[test]
    fn zero_mu_needs_a_finite_shell() {
        let e = kac_rice_integral(&one_atom(), 0.0, &DomainSpec::full(), 2, &quick(), 1);
        assert!(e.is_err());
    }
}
