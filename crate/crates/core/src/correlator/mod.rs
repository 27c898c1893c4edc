//! Structure functions `D` of fields with isotropic increments.
//!
//! A structure function fixes the increment law through
//! `E[(X(x) - X(y))^2] = N D(|x - y|^2 / N)`. Every kind implements
//! [`StructureFunction`] with analytic derivatives up to order four, and the
//! [`CorrelatorRegistry`] maps configuration names onto constructors so new
//! kinds can be plugged in without touching the analytic layers.

mod kinds;
mod registry;
mod validity;

use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};

pub use kinds::{Atom, AtomicMixture, LogCorrelator, PowerCorrelator, SinhCorrelator};
pub use registry::{CorrelatorBuilder, CorrelatorRegistry};
pub use validity::{
    check_assumption_iv, check_bernstein, default_grid, Check, SufficientCondition,
    ValidityReport, Verdict,
};

/// Whether a kind is known to be a Thorin–Bernstein function with no `a/x` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThorinBernstein {
    Yes,
    No,
    Unknown,
}

/// One kind of structure function.
///
/// Implementations return `D^{(order)}(r)` for `order` in `0..=4` and `r >= 0`;
/// at `r = 0` the one-sided limit. Range checks happen in [`Correlator`].
pub trait StructureFunction: Send + Sync + fmt::Debug {
    /// Registry key of this kind.
    fn kind(&self) -> &'static str;

    /// Parameters as they appear in a configuration file (without the `kind` key).
    fn params(&self) -> Value;

    fn derivative(&self, r: f64, order: u8) -> Result<f64>;

    fn thorin_bernstein(&self) -> ThorinBernstein {
        ThorinBernstein::Unknown
    }

    /// Atoms `(weight, scale)` and linear slope, for kinds built from a discrete
    /// spectral measure. Path samplers need this.
    fn spectral_atoms(&self) -> Option<(&[Atom], f64)> {
        None
    }
}

/// A shared, immutable structure function.
#[derive(Clone)]
pub struct Correlator(Arc<dyn StructureFunction>);

impl fmt::Debug for Correlator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Correlator {
    pub fn new<S: StructureFunction + 'static>(inner: S) -> Self {
        Self(Arc::new(inner))
    }

    /// `D(r) = log(1 + r/eps)`.
    pub fn log(eps: f64) -> Result<Self> {
        Ok(Self::new(LogCorrelator::new(eps)?))
    }

    /// `D(r) = (r + eps)^gamma - eps^gamma`, `gamma` in `(0, 1]`.
    pub fn power(gamma: f64, eps: f64) -> Result<Self> {
        Ok(Self::new(PowerCorrelator::new(gamma, eps)?))
    }

    /// `D(r) = sum_k nu_k (1 - exp(-r t_k^2)) + slope * r`.
    pub fn atomic(atoms: Vec<Atom>, slope: f64) -> Result<Self> {
        Ok(Self::new(AtomicMixture::new(atoms, slope)?))
    }

    /// `D(r) = sqrt(r) sinh^2(sqrt r) / sinh(2 sqrt r)`.
    pub fn sinh_example() -> Self {
        Self::new(SinhCorrelator)
    }

    pub fn kind(&self) -> &'static str {
        self.0.kind()
    }

    pub fn params(&self) -> Value {
        self.0.params()
    }

    /// Configuration form: the parameters plus a `kind` key.
    pub fn to_config(&self) -> Value {
        let mut v = self.params();
        if let Value::Object(map) = &mut v {
            map.insert("kind".into(), Value::String(self.kind().into()));
        }
        v
    }

    pub fn thorin_bernstein(&self) -> ThorinBernstein {
        self.0.thorin_bernstein()
    }

    pub fn spectral_atoms(&self) -> Option<(&[Atom], f64)> {
        self.0.spectral_atoms()
    }

    /// `D(r)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        self.0.derivative(r, 0)
    }

    /// `D^{(order)}(r)` for `order` in `1..=4`.
    pub fn derivative(&self, r: f64, order: u8) -> Result<f64> {
        check_radius(r)?;
        if !(1..=4).contains(&order) {
            return Err(Error::Domain(format!("derivative order {order} outside 1..=4")));
        }
        self.0.derivative(r, order)
    }

    /// `D'(0)`.
    pub fn dp0(&self) -> f64 {
        self.0.derivative(0.0, 1).expect("first derivative at 0")
    }

    /// `D''(0)`.
    pub fn dpp0(&self) -> f64 {
        self.0.derivative(0.0, 2).expect("second derivative at 0")
    }

    /// `D'''(0)`.
    pub fn dppp0(&self) -> f64 {
        self.0.derivative(0.0, 3).expect("third derivative at 0")
    }

    /// `(D(r), D'(r), D''(r))` at a nonnegative `r`.
    pub(crate) fn jet2(&self, r: f64) -> (f64, f64, f64) {
        let d = |k| self.0.derivative(r, k).expect("derivative of a built correlator");
        (d(0), d(1), d(2))
    }

    /// `J = sqrt(-2 D''(0))`, the curvature scale separating the two nonzero-mu phases.
    pub fn curvature_scale(&self) -> f64 {
        (-2.0 * self.dpp0()).sqrt()
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("structure function argument must be >= 0, got {r}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_values_and_derivatives() {
        let c = Correlator::log(1.0).unwrap();
        assert_eq!(c.eval(0.0).unwrap(), 0.0);
        assert_relative_eq!(c.eval(1.0).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_relative_eq!(c.derivative(0.0, 2).unwrap(), -1.0);
        assert_relative_eq!(c.derivative(1.0, 3).unwrap(), 0.25);
    }

    #[test]
    fn atomic_values_and_derivatives() {
        let c = Correlator::atomic(vec![Atom::new(1.0, 1.0)], 0.0).unwrap();
        assert_relative_eq!(c.eval(1.0).unwrap(), 1.0 - (-1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(c.derivative(0.0, 1).unwrap(), 1.0);
    }

    #[test]
    fn rejects_negative_argument_and_bad_order() {
        let c = Correlator::log(1.0).unwrap();
        assert!(matches!(c.eval(-1e-3), Err(Error::Domain(_))));
        assert!(matches!(c.derivative(1.0, 5), Err(Error::Domain(_))));
        assert!(matches!(c.derivative(1.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn config_form_round_trips_through_registry() {
        let reg = CorrelatorRegistry::builtin();
        for c in [
            Correlator::log(0.5).unwrap(),
            Correlator::power(0.3, 2.0).unwrap(),
            Correlator::atomic(vec![Atom::new(1.0, 2.0), Atom::new(0.5, 0.3)], 0.1).unwrap(),
            Correlator::sinh_example(),
        ] {
            let back = reg.build(&c.to_config()).unwrap();
            assert_eq!(back.kind(), c.kind());
            for r in [0.0, 0.3, 2.0, 40.0] {
                assert_eq!(back.eval(r).unwrap(), c.eval(r).unwrap());
            }
        }
    }
}
