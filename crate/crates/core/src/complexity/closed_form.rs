use std::f64::consts::LN_2;

use super::{BoundaryHit, CriticalLocus, Regime};
use crate::correlator::Correlator;
use crate::error::{Error, Result};
use crate::geometry::landscape_params;

/// Explicit maximizer of `psi*` for `E = R` and the shell `(R1, R2)`.
///
/// The radius maximizes `log rho - mu^2 rho^2 / (2 D'(0))`, so it is
/// `sqrt(D'(0))/|mu|` clamped into `[R1, R2]`. The remaining coordinates
/// separate from the radius.
pub fn closed_form_optimum(c: &Correlator, mu: f64, r1: f64, r2: f64) -> Result<CriticalLocus> {
    if !(r1 >= 0.0 && r2 > r1) {
        return Err(Error::Domain(format!("need 0 <= R1 < R2, got ({r1}, {r2})")));
    }
    let (dp0, dpp0) = (c.dp0(), c.dpp0());
    let j = c.curvature_scale();
    let regime = Regime::of(c, mu);

    if regime == Regime::ZeroMu {
        if r2.is_infinite() {
            return Err(Error::Domain("R2 required when mu=0".into()));
        }
        return Ok(CriticalLocus {
            rho_star: r2,
            u_star: 0.0,
            y_star: 0.0,
            v_star: 0.0,
            psi_value: -0.5 - 0.5 * LN_2 + r2.ln(),
            regime,
            boundary_hit: BoundaryHit { rho: true, u: false },
            near_optima: vec![],
        });
    }

    let m = mu.abs();
    let free = dp0.sqrt() / m;
    let rho = free.clamp(r1, r2);
    let p = landscape_params(c, mu, rho)?;
    let dp_rho = c.derivative(rho * rho, 1)?;
    let radial = rho.ln() - mu * mu * rho * rho / (2.0 * dp0);

    let (y, v, u, psi) = match regime {
        Regime::SubcriticalMu => {
            let y = -mu / (-dpp0).sqrt();
            let u = mu * (dp_rho - dp0) / (-2.0 * dpp0) + p.m_y;
            let psi = mu * mu / (-4.0 * dpp0) - 0.5 - 0.5 * LN_2 + radial;
            (y, mu * p.frak_t / (j * j), u, psi)
        }
        _ => {
            let y = -(mu / j + j / mu) / std::f64::consts::SQRT_2;
            let u = (dp_rho - dp0) / mu + p.m_y;
            let psi = -0.5 * LN_2 - j.ln() + m.ln() + radial;
            (y, p.frak_t / mu, u, psi)
        }
    };

    Ok(CriticalLocus {
        rho_star: rho,
        u_star: u,
        y_star: y,
        v_star: v,
        psi_value: psi,
        regime,
        boundary_hit: BoundaryHit { rho: rho != free, u: false },
        near_optima: vec![],
    })
}
