//! Annealed complexity: the closed-form total complexity, the variational
//! objective `psi*`, its closed-form and numerical maximizers, and the
//! constrained complexity built on them.

mod closed_form;
mod objective;
mod solver;
mod variational;

use serde::{Deserialize, Serialize};

use crate::correlator::Correlator;
use crate::error::{Error, Result};

pub use closed_form::closed_form_optimum;
pub use objective::{psi_star, psi_star_reduced};
pub use solver::{ClosedFormSolver, ComplexitySolver, SolverRegistry, VariationalSolver};
pub use variational::{optimize_psi, OptimizerOptions};

/// Exponential cost of the domain, in either of its two forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    /// `-lim (1/N) log P(z in |mu| B_N / sqrt D'(0))`, used when `mu != 0`.
    Xi(f64),
    /// Volume growth rate of `B_N`, used when `mu = 0`.
    Theta(f64),
}

/// Shell radii and the energy window `E = (e_lo, e_hi)`; infinite bounds allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainSpec {
    pub r1: f64,
    pub r2: f64,
    pub e_lo: f64,
    pub e_hi: f64,
    pub growth: Option<Growth>,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self::full()
    }
}

impl DomainSpec {
    /// `(0, inf) x R`.
    pub fn full() -> Self {
        Self { r1: 0.0, r2: f64::INFINITY, e_lo: f64::NEG_INFINITY, e_hi: f64::INFINITY, growth: None }
    }

    pub fn shell(r1: f64, r2: f64) -> Self {
        Self { r1, r2, ..Self::full() }
    }

    pub fn with_energy(self, e_lo: f64, e_hi: f64) -> Self {
        Self { e_lo, e_hi, ..self }
    }

    pub fn energy_is_full(&self) -> bool {
        self.e_lo == f64::NEG_INFINITY && self.e_hi == f64::INFINITY
    }

    /// Checks `0 <= R1 < R2`, a nonempty open `E`, and `|mu| + 1/R2 > 0`.
    pub fn validate(&self, mu: f64) -> Result<()> {
        if !(self.r1.is_finite() && self.r1 >= 0.0) {
            return Err(Error::Domain(format!("R1 must be finite and >= 0, got {}", self.r1)));
        }
        if !(self.r2 > self.r1) {
            return Err(Error::Domain(format!("need R1 < R2, got R1 = {}, R2 = {}", self.r1, self.r2)));
        }
        if !(self.e_lo < self.e_hi) {
            return Err(Error::EmptyFeasible(format!(
                "energy window ({}, {}) is empty",
                self.e_lo, self.e_hi
            )));
        }
        if !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {mu}")));
        }
        if mu == 0.0 && self.r2.is_infinite() {
            return Err(Error::Domain("R2 required when mu=0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SubcriticalMu,
    SupercriticalMu,
    ZeroMu,
}

impl Regime {
    /// Classifies `mu` against `J = sqrt(-2 D''(0))`.
    pub fn of(c: &Correlator, mu: f64) -> Self {
        if mu == 0.0 {
            Regime::ZeroMu
        } else if mu.abs() <= c.curvature_scale() {
            Regime::SubcriticalMu
        } else {
            Regime::SupercriticalMu
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BoundaryHit {
    pub rho: bool,
    pub u: bool,
}

/// One point `(rho, u, y)` with its objective value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocusPoint {
    pub rho: f64,
    pub u: f64,
    pub y: f64,
    pub psi: f64,
}

/// Maximizer of `psi*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalLocus {
    pub rho_star: f64,
    pub u_star: f64,
    pub y_star: f64,
    pub v_star: f64,
    pub psi_value: f64,
    pub regime: Regime,
    pub boundary_hit: BoundaryHit,
    /// Other maximizers within the tie tolerance (variational solver only).
    pub near_optima: Vec<LocusPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    ClosedForm,
    Variational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityResult {
    pub value: f64,
    pub locus: Option<CriticalLocus>,
    pub method: Method,
}

/// Total complexity over the whole space.
///
/// `|mu| > J`: `-Xi`; `0 < |mu| <= J`: `-log(|mu|/J) + mu^2/(-4D''(0)) - 1/2 - Xi`;
/// `mu = 0`: `log J - 1/2 - log(2 pi)/2 - log D'(0)/2 + Theta`.
pub fn total_complexity(c: &Correlator, mu: f64, growth: Growth) -> Result<ComplexityResult> {
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    let j = c.curvature_scale();
    let value = match (mu == 0.0, growth) {
        (false, Growth::Xi(xi)) if mu.abs() > j => -xi,
        (false, Growth::Xi(xi)) => -(mu.abs() / j).ln() + mu * mu / (-4.0 * c.dpp0()) - 0.5 - xi,
        (true, Growth::Theta(theta)) => {
            j.ln() - 0.5 - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * c.dp0().ln() + theta
        }
        (false, Growth::Theta(_)) => {
            return Err(Error::InvalidParameter("mu != 0 needs the Xi growth constant".into()))
        }
        (true, Growth::Xi(_)) => {
            return Err(Error::InvalidParameter("mu = 0 needs the Theta growth constant".into()))
        }
    };
    Ok(ComplexityResult { value, locus: None, method: Method::ClosedForm })
}

/// `(1/2)(mu^2/J^2 - 1) - log(mu/J)` for `0 < |mu| <= J`.
pub fn sigma_fyodorov(c: &Correlator, mu: f64) -> Result<f64> {
    let j = c.curvature_scale();
    let m = mu.abs();
    if !(m > 0.0 && m <= j) {
        return Err(Error::Domain(format!("need 0 < |mu| <= J = {j}, got mu = {mu}")));
    }
    let ratio = m / j;
    Ok(0.5 * (ratio * ratio - 1.0) - ratio.ln())
}

/// `(1/2) log(-4 D''(0)) - (1/2) log D'(0) + 1/2`, the constant added to `sup psi*`.
pub fn constrained_prefactor(c: &Correlator) -> f64 {
    0.5 * (-4.0 * c.dpp0()).ln() - 0.5 * c.dp0().ln() + 0.5
}

/// Complexity of critical points in the shell `(R1, R2)` with values in `E`,
/// from the numerical maximization of `psi*`.
pub fn complexity_constrained(
    c: &Correlator,
    mu: f64,
    dom: &DomainSpec,
    opts: &OptimizerOptions,
) -> Result<ComplexityResult> {
    let locus = optimize_psi(c, mu, dom, opts)?;
    Ok(ComplexityResult {
        value: constrained_prefactor(c) + locus.psi_value,
        locus: Some(locus),
        method: Method::Variational,
    })
}
