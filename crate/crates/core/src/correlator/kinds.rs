use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{StructureFunction, ThorinBernstein};
use crate::error::{Error, Result};

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
    }
}

/// `D(r) = log(1 + r/eps)`.
#[derive(Debug, Clone)]
pub struct LogCorrelator {
    eps: f64,
}

impl LogCorrelator {
    pub fn new(eps: f64) -> Result<Self> {
        positive("eps", eps)?;
        Ok(Self { eps })
    }
}

impl StructureFunction for LogCorrelator {
    fn kind(&self) -> &'static str {
        "log"
    }

    fn params(&self) -> Value {
        json!({ "eps": self.eps })
    }

    fn derivative(&self, r: f64, order: u8) -> Result<f64> {
        let s = r + self.eps;
        Ok(match order {
            0 => (r / self.eps).ln_1p(),
            1 => 1.0 / s,
            2 => -1.0 / (s * s),
            3 => 2.0 / (s * s * s),
            4 => -6.0 / (s * s * s * s),
            _ => return Err(Error::Domain(format!("derivative order {order}"))),
        })
    }

    fn thorin_bernstein(&self) -> ThorinBernstein {
        ThorinBernstein::Yes
    }
}

/// `D(r) = (r + eps)^gamma - eps^gamma` with `gamma` in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct PowerCorrelator {
    gamma: f64,
    eps: f64,
}

impl PowerCorrelator {
    pub fn new(gamma: f64, eps: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power correlator needs gamma in (0, 1], got {gamma}"
            )));
        }
        positive("eps", eps)?;
        Ok(Self { gamma, eps })
    }
}

impl StructureFunction for PowerCorrelator {
    fn kind(&self) -> &'static str {
        "power"
    }

    fn params(&self) -> Value {
        json!({ "gamma": self.gamma, "eps": self.eps })
    }

    fn derivative(&self, r: f64, order: u8) -> Result<f64> {
        if order > 4 {
            return Err(Error::Domain(format!("derivative order {order}")));
        }
        let s = r + self.eps;
        if order == 0 {
            // (s^g - eps^g) without cancellation for small r
            let g = self.gamma;
            return Ok(self.eps.powf(g) * (g * (r / self.eps).ln_1p()).exp_m1());
        }
        let falling: f64 = (0..order).map(|j| self.gamma - j as f64).product();
        Ok(falling * s.powf(self.gamma - order as f64))
    }

    fn thorin_bernstein(&self) -> ThorinBernstein {
        ThorinBernstein::Yes
    }
}

/// One atom `nu * delta_t` of a discrete spectral measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub weight: f64,
    pub scale: f64,
}

impl Atom {
    pub fn new(weight: f64, scale: f64) -> Self {
        Self { weight, scale }
    }
}

/// `D(r) = sum_k nu_k (1 - exp(-r t_k^2)) + slope * r`.
#[derive(Debug, Clone)]
pub struct AtomicMixture {
    atoms: Vec<Atom>,
    slope: f64,
}

impl AtomicMixture {
    pub fn new(atoms: Vec<Atom>, slope: f64) -> Result<Self> {
        for a in &atoms {
            positive("atom weight", a.weight)?;
            positive("atom scale", a.scale)?;
        }
        if !(slope.is_finite() && slope >= 0.0) {
            return Err(Error::InvalidParameter(format!("slope must be >= 0, got {slope}")));
        }
        Ok(Self { atoms, slope })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

impl StructureFunction for AtomicMixture {
    fn kind(&self) -> &'static str {
        "atomic"
    }

    fn params(&self) -> Value {
        json!({ "atoms": self.atoms, "slope": self.slope })
    }

    fn derivative(&self, r: f64, order: u8) -> Result<f64> {
        if order > 4 {
            return Err(Error::Domain(format!("derivative order {order}")));
        }
        let mut acc = 0.0;
        for a in &self.atoms {
            let t2 = a.scale * a.scale;
            acc += if order == 0 {
                -a.weight * (-r * t2).exp_m1()
            } else {
                let sign = if order % 2 == 1 { 1.0 } else { -1.0 };
                sign * a.weight * t2.powi(order as i32) * (-r * t2).exp()
            };
        }
        Ok(acc
            + match order {
                0 => self.slope * r,
                1 => self.slope,
                _ => 0.0,
            })
    }

    fn spectral_atoms(&self) -> Option<(&[Atom], f64)> {
        Some((&self.atoms, self.slope))
    }
}

/// `D(x) = sqrt(x) sinh^2(sqrt x) / sinh(2 sqrt x) = (sqrt(x)/2) tanh(sqrt x)`,
/// a complete Bernstein function that is not Thorin–Bernstein.
#[derive(Debug, Clone, Copy)]
pub struct SinhCorrelator;

/// Below this argument the power series in `x` is used.
const SINH_SERIES_CUTOFF: f64 = 0.25;
const SINH_SERIES_TERMS: usize = 40;

/// Coefficients `b_n` with `D(x) = sum_{n>=1} b_n x^n`, from the Taylor
/// coefficients of tanh (`t' = 1 - t^2`).
fn sinh_series() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let len = 2 * SINH_SERIES_TERMS + 1;
        let mut a = vec![0.0; len];
        a[1] = 1.0;
        for k in 1..len - 1 {
            let c: f64 = (0..=k).map(|j| a[j] * a[k - j]).sum();
            a[k + 1] = -c / (k + 1) as f64;
        }
        // s tanh s = sum a_{2n-1} s^{2n}
        let mut b = vec![0.0; SINH_SERIES_TERMS + 1];
        for n in 1..=SINH_SERIES_TERMS {
            b[n] = 0.5 * a[2 * n - 1];
        }
        b
    })
}

const JET: usize = 5;

fn jet_mul(a: &[f64; JET], b: &[f64; JET]) -> [f64; JET] {
    let mut c = [0.0; JET];
    for k in 0..JET {
        c[k] = (0..=k).map(|j| a[j] * b[k - j]).sum();
    }
    c
}

fn jet_sqrt(a: &[f64; JET]) -> [f64; JET] {
    let mut s = [0.0; JET];
    s[0] = a[0].sqrt();
    for k in 1..JET {
        let cross: f64 = (1..k).map(|j| s[j] * s[k - j]).sum();
        s[k] = (a[k] - cross) / (2.0 * s[0]);
    }
    s
}

fn jet_tanh(a: &[f64; JET]) -> [f64; JET] {
    let mut u = [0.0; JET];
    let mut v = [0.0; JET];
    u[0] = a[0].tanh();
    // sech^2 without the 1 - tanh^2 cancellation
    let e = (-2.0 * a[0].abs()).exp();
    v[0] = 4.0 * e / ((1.0 + e) * (1.0 + e));
    for k in 1..JET {
        u[k] = (1..=k).map(|j| j as f64 * a[j] * v[k - j]).sum::<f64>() / k as f64;
        v[k] = -(0..=k).map(|j| u[j] * u[k - j]).sum::<f64>();
    }
    u
}

impl SinhCorrelator {
    fn series_derivative(x: f64, order: u8) -> f64 {
        let b = sinh_series();
        let k = order as usize;
        // Horner over the powers x^{n-k}, n from the top down
        let mut acc = 0.0;
        for n in (k.max(1)..=SINH_SERIES_TERMS).rev() {
            let falling: f64 = (0..k).map(|j| (n - j) as f64).product();
            acc = acc * x + b[n] * falling;
        }
        if k == 0 {
            acc * x
        } else {
            acc
        }
    }

    fn jet_derivative(x: f64, order: u8) -> f64 {
        let arg = [x, 1.0, 0.0, 0.0, 0.0];
        let s = jet_sqrt(&arg);
        let t = jet_tanh(&s);
        let st = jet_mul(&s, &t);
        let factorial: f64 = (1..=order as usize).map(|j| j as f64).product();
        0.5 * st[order as usize] * factorial
    }
}

impl StructureFunction for SinhCorrelator {
    fn kind(&self) -> &'static str {
        "sinh"
    }

    fn params(&self) -> Value {
        json!({})
    }

    fn derivative(&self, r: f64, order: u8) -> Result<f64> {
        if order > 4 {
            return Err(Error::Domain(format!("derivative order {order}")));
        }
        if order == 0 && r == 0.0 {
            return Ok(0.0);
        }
        Ok(if r < SINH_SERIES_CUTOFF {
            Self::series_derivative(r, order)
        } else {
            Self::jet_derivative(r, order)
        })
    }

    fn thorin_bernstein(&self) -> ThorinBernstein {
        ThorinBernstein::No
    }
}
