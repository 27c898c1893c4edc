use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use super::kinds::Atom;
use super::Correlator;
use crate::error::{Error, Result};

/// Builds a correlator from the parameter object of a config entry
/// (the `kind` key already removed).
pub type CorrelatorBuilder = fn(&Value) -> Result<Correlator>;

/// Name -> constructor table for structure-function kinds.
#[derive(Clone)]
pub struct CorrelatorRegistry {
    builders: BTreeMap<&'static str, CorrelatorBuilder>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LogParams {
    #[serde(default = "one")]
    eps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerParams {
    gamma: f64,
    #[serde(default = "one")]
    eps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomicParams {
    atoms: Vec<Atom>,
    #[serde(default)]
    slope: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

fn one() -> f64 {
    1.0
}

fn parse<T: for<'de> Deserialize<'de>>(kind: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone())
        .map_err(|e| Error::Config(format!("correlator '{kind}': {e}")))
}

fn build_log(v: &Value) -> Result<Correlator> {
    let p: LogParams = parse("log", v)?;
    Correlator::log(p.eps)
}

fn build_power(v: &Value) -> Result<Correlator> {
    let p: PowerParams = parse("power", v)?;
    Correlator::power(p.gamma, p.eps)
}

fn build_atomic(v: &Value) -> Result<Correlator> {
    let p: AtomicParams = parse("atomic", v)?;
    Correlator::atomic(p.atoms, p.slope)
}

fn build_sinh(v: &Value) -> Result<Correlator> {
    let _: NoParams = parse("sinh", v)?;
    Ok(Correlator::sinh_example())
}

impl CorrelatorRegistry {
    pub fn empty() -> Self {
        Self { builders: BTreeMap::new() }
    }

    /// Registry holding `log`, `power`, `atomic` and `sinh`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("log", build_log);
        r.register("power", build_power);
        r.register("atomic", build_atomic);
        r.register("sinh", build_sinh);
        r
    }

    pub fn register(&mut self, kind: &'static str, builder: CorrelatorBuilder) {
        self.builders.insert(kind, builder);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }

    /// Builds from an object like `{"kind": "power", "gamma": 0.5, "eps": 1.0}`.
    pub fn build(&self, spec: &Value) -> Result<Correlator> {
        let Value::Object(map) = spec else {
            return Err(Error::Config("correlator must be an object with a 'kind' key".into()));
        };
        let kind = map
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config("correlator is missing a string 'kind'".into()))?;
        let builder = self.builders.get(kind).ok_or_else(|| {
            let known: Vec<_> = self.kinds().collect();
            Error::Config(format!("unknown correlator kind '{kind}' (known: {})", known.join(", ")))
        })?;
        let mut params = map.clone();
        params.remove("kind");
        builder(&Value::Object(params)).map_err(|e| match e {
            Error::InvalidParameter(m) => Error::Config(format!("correlator '{kind}': {m}")),
            other => other,
        })
    }
}

impl Default for CorrelatorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn unknown_kind_and_keys_are_rejected() {
        let reg = CorrelatorRegistry::builtin();
        assert!(reg.build(&json!({"kind": "cauchy"})).is_err());
        assert!(reg.build(&json!({"kind": "log", "epsilon": 1.0})).is_err());
        assert!(reg.build(&json!({"kind": "power", "gamma": 1.5})).is_err());
        assert!(reg.build(&json!({"eps": 1.0})).is_err());
    }

    #[test]
    fn defaults_are_filled() {
        let reg = CorrelatorRegistry::builtin();
        let c = reg.build(&json!({"kind": "log"})).unwrap();
        assert_eq!(c.params(), json!({"eps": 1.0}));
    }
}
