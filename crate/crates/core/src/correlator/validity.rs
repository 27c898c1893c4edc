//! Grid-based validity checks: Bernstein sign conditions and Assumption IV.

use serde::Serialize;

use super::{Correlator, ThorinBernstein};
use crate::geometry;
use crate::numeric::logspace;

/// Relative rounding allowance for non-strict inequalities that hold with
/// equality (e.g. the log correlator saturates one of the ratio conditions).
const ROUNDING: f64 = 1e-10;

/// 64 log-spaced points in `[1e-4, 1e4]`.
pub fn default_grid() -> Vec<f64> {
    logspace(1e-4, 1e4, 64)
}

/// A gating inequality checked at every grid point.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub grid: Vec<f64>,
    pub passed: bool,
    /// Signed minimum slack over the grid (negative when violated).
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
}

/// A sufficient condition: informative only, never gating.
#[derive(Debug, Clone, Serialize)]
pub struct SufficientCondition {
    pub name: String,
    pub grid: Vec<f64>,
    pub verdict: Verdict,
    pub worst_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub checks: Vec<Check>,
    pub conditions: Vec<SufficientCondition>,
    pub overall: bool,
}

impl ValidityReport {
    pub fn new(checks: Vec<Check>, conditions: Vec<SufficientCondition>) -> Self {
        let overall = checks.iter().all(|c| c.passed);
        Self { checks, conditions, overall }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn condition(&self, name: &str) -> Option<&SufficientCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Concatenates two reports; `overall` is recomputed.
    pub fn merge(mut self, other: ValidityReport) -> Self {
        self.checks.extend(other.checks);
        self.conditions.extend(other.conditions);
        Self::new(self.checks, self.conditions)
    }
}

/// Minimum slack of `lhs >= rhs` (or `lhs > rhs` when `strict`) over a sweep.
struct Sweep {
    worst: f64,
    ok: bool,
    strict: bool,
}

impl Sweep {
    fn new(strict: bool) -> Self {
        Self { worst: f64::INFINITY, ok: true, strict }
    }

    fn push(&mut self, lhs: f64, rhs: f64) {
        let m = lhs - rhs;
        if !m.is_finite() {
            self.ok = false;
            self.worst = f64::NEG_INFINITY;
            return;
        }
        let pass = if self.strict {
            m > 0.0
        } else {
            m >= -ROUNDING * lhs.abs().max(rhs.abs())
        };
        self.ok &= pass;
        self.worst = self.worst.min(m);
    }

    fn check(self, name: &str, grid: &[f64]) -> Check {
        Check { name: name.into(), grid: grid.to_vec(), passed: self.ok, worst_margin: self.worst }
    }

    fn condition(self, name: &str, grid: &[f64]) -> SufficientCondition {
        SufficientCondition {
            name: name.into(),
            grid: grid.to_vec(),
            verdict: if self.ok { Verdict::Pass } else { Verdict::Fail },
            worst_margin: Some(self.worst),
        }
    }
}

/// Sign conditions of a Bernstein structure function on `grid`, plus pinning,
/// the linear bound `D(r) <= D'(0) r`, and `0 < |D''''(0)| < inf`.
pub fn check_bernstein(c: &Correlator, grid: &[f64]) -> ValidityReport {
    let d = |r: f64, k: u8| if k == 0 { c.eval(r) } else { c.derivative(r, k) }.unwrap_or(f64::NAN);
    let dp0 = c.dp0();

    let mut first = Sweep::new(false);
    let mut second = Sweep::new(false);
    let mut third = Sweep::new(false);
    let mut linear = Sweep::new(false);
    for &r in grid {
        first.push(d(r, 1), 0.0);
        second.push(0.0, d(r, 2));
        third.push(d(r, 3), 0.0);
        linear.push(dp0 * r, d(r, 0));
    }
    let mut pinned = Sweep::new(false);
    pinned.push(0.0, d(0.0, 0).abs());
    let mut fourth = Sweep::new(true);
    let d4 = d(0.0, 4).abs();
    fourth.push(if d4.is_finite() { d4 } else { f64::NAN }, 0.0);

    ValidityReport::new(
        vec![
            first.check("first_derivative_nonnegative", grid),
            second.check("second_derivative_nonpositive", grid),
            third.check("third_derivative_nonnegative", grid),
            pinned.check("pinned_at_zero", &[0.0]),
            linear.check("linear_bound", grid),
            fourth.check("fourth_derivative_at_zero", &[0.0]),
        ],
        vec![],
    )
}

/// Assumption IV on the grid of squared radii `grid` (each point is `y = rho^2`).
///
/// The two direct inequalities gate `overall`; the six sufficient conditions
/// are reported alongside as diagnostics.
pub fn check_assumption_iv(c: &Correlator, grid: &[f64]) -> ValidityReport {
    let dp0 = c.dp0();
    let dpp0 = c.dpp0();
    let d = |r: f64, k: u8| if k == 0 { c.eval(r) } else { c.derivative(r, k) }.unwrap_or(f64::NAN);

    let mut asmp1 = Sweep::new(true);
    let mut asmp2 = Sweep::new(true);
    let mut btbd = Sweep::new(false);
    let mut btinc = Sweep::new(false);
    let mut btbd2 = Sweep::new(false);
    let mut btbd3 = Sweep::new(false);
    let mut btbd4 = Sweep::new(false);

    for &y in grid {
        let s = geometry::shape(c, y.sqrt());
        let sum = s.alpha_rho_sq + s.frak_t;
        asmp1.push(-2.0 * dpp0, sum * s.frak_t);
        asmp2.push(-4.0 * dpp0, sum * s.alpha_rho_sq);
        btbd.push(-2.0 / 3.0 * dpp0, s.frak_t * s.frak_t);

        let (dy, d1, d2, d3) = (d(y, 0), d(y, 1), d(y, 2), d(y, 3));
        let inc_a = 2.0 * dp0 * d2 * (dy - d1 * y);
        let inc_b = d1 * (d1 - dp0) * (d1 - dp0);
        btinc.push(inc_a + inc_b, 0.0);
        btbd2.push(d1 * y / dp0, (d1 - dp0) / dpp0);
        btbd3.push(-d1 / d2 + dp0 / dpp0, y);
        btbd4.push(-d2 * d2 + d3 * d1, d2 * d2);
    }

    let tb = SufficientCondition {
        name: "thorin_bernstein".into(),
        grid: vec![],
        verdict: match c.thorin_bernstein() {
            ThorinBernstein::Yes => Verdict::Pass,
            ThorinBernstein::No => Verdict::Fail,
            ThorinBernstein::Unknown => Verdict::Unknown,
        },
        worst_margin: None,
    };

    ValidityReport::new(
        vec![asmp1.check("asmp1", grid), asmp2.check("asmp2", grid)],
        vec![
            btbd.condition("btbd", grid),
            btinc.condition("btinc", grid),
            btbd2.condition("btbd2", grid),
            btbd3.condition("btbd3", grid),
            btbd4.condition("btbd4", grid),
            tb,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::{Atom, StructureFunction};
    use crate::error::Result;
    use serde_json::{json, Value};

    /// Convex on purpose: D(r) = r^2 + r.
    #[derive(Debug)]
    struct Convex;

    impl StructureFunction for Convex {
        fn kind(&self) -> &'static str {
            "convex"
        }
        fn params(&self) -> Value {
            json!({})
        }
        fn derivative(&self, r: f64, order: u8) -> Result<f64> {
            Ok(match order {
                0 => r * r + r,
                1 => 2.0 * r + 1.0,
                2 => 2.0,
                _ => 0.0,
            })
        }
    }

    #[test]
    fn log_and_power_are_bernstein() {
        let grid = logspace(1e-3, 1e3, 50);
        assert!(check_bernstein(&Correlator::log(1.0).unwrap(), &grid).overall);
        assert!(check_bernstein(&Correlator::power(0.5, 1.0).unwrap(), &grid).overall);
        assert!(check_bernstein(&Correlator::sinh_example(), &grid).overall);
    }

    #[test]
    fn injected_convexity_is_reported() {
        let r = check_bernstein(&Correlator::new(Convex), &default_grid());
        assert!(!r.overall);
        let c = r.check("second_derivative_nonpositive").unwrap();
        assert!(!c.passed);
        assert!(c.worst_margin < 0.0);
    }

    #[test]
    fn linear_power_fails_assumption_i() {
        let r = check_bernstein(&Correlator::power(1.0, 1.0).unwrap(), &default_grid());
        assert!(!r.check("fourth_derivative_at_zero").unwrap().passed);
    }

    #[test]
    fn log_satisfies_ratio_condition_and_direct_inequalities() {
        let r = check_assumption_iv(&Correlator::log(1.0).unwrap(), &default_grid());
        assert!(r.overall);
        assert_eq!(r.condition("btbd3").unwrap().verdict, Verdict::Pass);
        assert_eq!(r.condition("thorin_bernstein").unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn direct_inequalities_at_unit_radius_for_log() {
        let r = check_assumption_iv(&Correlator::log(1.0).unwrap(), &[1.0]);
        // 2 > 1.128293 and 4 > 1.128293
        let m1 = r.check("asmp1").unwrap().worst_margin;
        let m2 = r.check("asmp2").unwrap().worst_margin;
        assert!((m1 - (2.0 - 1.128_293_311_870_375_6)).abs() < 1e-9);
        assert!((m2 - (4.0 - 1.128_293_311_870_375_6)).abs() < 1e-9);
    }

    #[test]
    fn sinh_example_fails_ratio_condition_but_keeps_t_bound() {
        let r = check_assumption_iv(&Correlator::sinh_example(), &default_grid());
        assert_eq!(r.condition("btbd3").unwrap().verdict, Verdict::Fail);
        assert_eq!(r.condition("btbd").unwrap().verdict, Verdict::Pass);
        assert_eq!(r.condition("thorin_bernstein").unwrap().verdict, Verdict::Fail);
        assert!(r.overall);
    }

    #[test]
    fn single_atom_passes_direct_checks_only() {
        let c = Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap();
        let r = check_assumption_iv(&c, &default_grid());
        assert!(r.overall);
        assert_eq!(r.condition("btbd").unwrap().verdict, Verdict::Fail);
        assert_eq!(r.condition("thorin_bernstein").unwrap().verdict, Verdict::Unknown);
    }
}
