use std::collections::BTreeMap;

use super::{
    closed_form_optimum, complexity_constrained, constrained_prefactor, ComplexityResult,
    DomainSpec, Method, OptimizerOptions,
};
use crate::correlator::Correlator;
use crate::error::{Error, Result};

/// A way of computing the constrained complexity.
pub trait ComplexitySolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(
        &self,
        c: &Correlator,
        mu: f64,
        dom: &DomainSpec,
        opts: &OptimizerOptions,
    ) -> Result<ComplexityResult>;
}

/// Explicit optimum; only for `E = R`.
pub struct ClosedFormSolver;

impl ComplexitySolver for ClosedFormSolver {
    fn name(&self) -> &'static str {
        "closed-form"
    }

    fn solve(
        &self,
        c: &Correlator,
        mu: f64,
        dom: &DomainSpec,
        _opts: &OptimizerOptions,
    ) -> Result<ComplexityResult> {
        dom.validate(mu)?;
        if !dom.energy_is_full() {
            return Err(Error::Unsupported(
                "the closed-form solver needs E = R; use the variational solver".into(),
            ));
        }
        let locus = closed_form_optimum(c, mu, dom.r1, dom.r2)?;
        Ok(ComplexityResult {
            value: constrained_prefactor(c) + locus.psi_value,
            locus: Some(locus),
            method: Method::ClosedForm,
        })
    }
}

/// Grid search plus line-search polish of `psi*`.
pub struct VariationalSolver;

impl ComplexitySolver for VariationalSolver {
    fn name(&self) -> &'static str {
        "variational"
    }

    fn solve(
        &self,
        c: &Correlator,
        mu: f64,
        dom: &DomainSpec,
        opts: &OptimizerOptions,
    ) -> Result<ComplexityResult> {
        complexity_constrained(c, mu, dom, opts)
    }
}

/// Name -> solver table.
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn ComplexitySolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { solvers: BTreeMap::new() }
    }

    /// `closed-form` and `variational`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ClosedFormSolver));
        r.register(Box::new(VariationalSolver));
        r
    }

    pub fn register(&mut self, solver: Box<dyn ComplexitySolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ComplexitySolver> {
        self.solvers.get(name).map(|s| s.as_ref()).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::Config(format!("unknown solver '{name}' (known: {})", known.join(", ")))
        })
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_dispatch() {
        let reg = SolverRegistry::builtin();
        assert_eq!(reg.names().collect::<Vec<_>>(), ["closed-form", "variational"]);
        assert!(reg.get("newton").is_err());
        let c = Correlator::log(1.0).unwrap();
        let dom = DomainSpec::full();
        let opts = OptimizerOptions::default();
        let a = reg.get("closed-form").unwrap().solve(&c, 1.0, &dom, &opts).unwrap();
        let b = reg.get("variational").unwrap().solve(&c, 1.0, &dom, &opts).unwrap();
        assert!((a.value - b.value).abs() < 1e-6);
        assert_eq!((a.method, b.method), (Method::ClosedForm, Method::Variational));
    }

    #[test]
    fn closed_form_refuses_an_energy_window() {
        let c = Correlator::log(1.0).unwrap();
        let dom = DomainSpec::full().with_energy(-1.0, 0.0);
        let e = ClosedFormSolver.solve(&c, 1.0, &dom, &OptimizerOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
    }
}
