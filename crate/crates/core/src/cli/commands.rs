use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::Resolved;
use super::output::Report;
use crate::complexity::{
    complexity_constrained, total_complexity, ComplexityResult, Growth, SolverRegistry,
};
use crate::correlator::{check_assumption_iv, check_bernstein, Verdict};
use crate::error::Result;
use crate::hessian::{verify_conditional_covariance, verify_schur, ConditionalHessianModel};
use crate::kacrice::{count_critical_points, kac_rice_integral, sample_field};
use crate::rng::split_seed;

pub fn validate(r: &Resolved) -> Result<Report> {
    let grid = r.config.validity.grid()?;
    let c = &r.correlator;
    let report = check_bernstein(c, &grid).merge(check_assumption_iv(c, &grid));
    let mut out = Report::new("validate", vec!["name", "role", "passed", "verdict", "worst_margin"]);
    for ch in &report.checks {
        let verdict = if ch.passed { "pass" } else { "fail" };
        out.push(vec![json!(ch.name), json!("required"), json!(ch.passed), json!(verdict), json!(ch.worst_margin)]);
    }
    for cond in &report.conditions {
        let passed = match cond.verdict {
            Verdict::Pass => json!(true),
            Verdict::Fail => json!(false),
            Verdict::Unknown => Value::Null,
        };
        out.push(vec![json!(cond.name), json!("sufficient"), passed, json!(cond.verdict), json!(cond.worst_margin)]);
    }
    out.set("overall", json!(report.overall));
    out.set("grid_points", json!(grid.len()));
    out.passed = report.overall;
    Ok(out)
}

const SWEEP_COLUMNS: [&str; 11] =
    ["mu", "r1", "r2", "e_lo", "e_hi", "value", "rho_star", "u_star", "y_star", "regime", "error"];

fn sweep(r: &Resolved, name: &'static str, extra: &[&'static str]) -> Result<(Report, Vec<Option<ComplexityResult>>)> {
    let registry = SolverRegistry::builtin();
    let solver = registry.get(&r.config.solver)?;
    let dom = r.config.domain.spec();
    let mut columns = SWEEP_COLUMNS.to_vec();
    columns.extend_from_slice(extra);
    let mut out = Report::new(name, columns);
    let mus = r.config.mu.values();
    let results: Vec<Result<ComplexityResult>> =
        mus.par_iter().map(|&mu| solver.solve(&r.correlator, mu, &dom, &r.config.optimizer)).collect();
    let mut kept = Vec::new();
    let mut failures = 0;
    for (&mu, res) in mus.iter().zip(results) {
        let head = vec![json!(mu), json!(dom.r1), json!(dom.r2), json!(dom.e_lo), json!(dom.e_hi)];
        let row = match &res {
            Ok(v) => {
                let l = v.locus.as_ref();
                [
                    json!(v.value),
                    json!(l.map(|l| l.rho_star)),
                    json!(l.map(|l| l.u_star)),
                    json!(l.map(|l| l.y_star)),
                    json!(l.map(|l| l.regime)),
                    Value::Null,
                ]
            }
            Err(e) => {
                failures += 1;
                [Value::Null, Value::Null, Value::Null, Value::Null, Value::Null, json!(e.to_string())]
            }
        };
        let mut full = head;
        full.extend(row);
        full.extend(std::iter::repeat_n(Value::Null, extra.len()));
        out.push(full);
        kept.push(res.ok());
    }
    out.set("solver", json!(solver.name()));
    out.set("row_errors", json!(failures));
    Ok((out, kept))
}

pub fn complexity(r: &Resolved) -> Result<Report> {
    let (mut out, results) = sweep(r, "complexity", &["total"])?;
    let xi = match r.config.domain.growth {
        Some(Growth::Xi(x)) => x,
        _ => 0.0,
    };
    let last = out.columns.len() - 1;
    for (row, res) in out.rows.iter_mut().zip(&results) {
        let mu = row[0].as_f64().expect("mu is numeric");
        if res.is_some() && mu != 0.0 {
            row[last] = json!(total_complexity(&r.correlator, mu, Growth::Xi(xi)).ok().map(|t| t.value));
        }
    }
    Ok(out)
}

pub fn optimize(r: &Resolved) -> Result<Report> {
    let extra = ["v_star", "psi", "boundary_rho", "boundary_u", "method", "near_optima"];
    let (mut out, results) = sweep(r, "optimize", &extra)?;
    let base = SWEEP_COLUMNS.len();
    for (row, res) in out.rows.iter_mut().zip(&results) {
        let Some(res) = res else { continue };
        if let Some(l) = &res.locus {
            row[base] = json!(l.v_star);
            row[base + 1] = json!(l.psi_value);
            row[base + 2] = json!(l.boundary_hit.rho);
            row[base + 3] = json!(l.boundary_hit.u);
            row[base + 5] = json!(l.near_optima);
        }
        row[base + 4] = json!(res.method);
    }
    Ok(out)
}

pub fn verify(r: &Resolved) -> Result<Report> {
    let v = &r.config.verify;
    let c = &r.correlator;
    let mu = r.config.mu.values()[0];
    let seed = r.config.seed;
    let model = ConditionalHessianModel::new(c, mu, v.rho, v.u, v.n)?;
    let mut out = Report::new("verify", vec!["check", "passed", "measured", "threshold", "detail"]);

    let cov = verify_conditional_covariance(&model, v.covariance_samples, split_seed(seed, 0));
    let mean_z = cov.means.iter().map(|m| m.z_score()).fold(0.0, f64::max);
    let cov_z = cov.covariances.iter().map(|m| m.z_score()).fold(0.0, f64::max);
    let z = v.covariance_z;
    out.push(vec![json!("conditional_mean"), json!(mean_z <= z), json!(mean_z), json!(z), json!(format!("{} entries, {} draws", cov.means.len(), cov.samples))]);
    out.push(vec![json!("conditional_covariance"), json!(cov_z <= z), json!(cov_z), json!(z), json!(format!("{} pairs, {} draws", cov.covariances.len(), cov.samples))]);

    let schur = verify_schur(&model, v.schur_draws, split_seed(seed, 1));
    out.push(vec![json!("schur_determinant"), json!(schur.max_rel_det <= v.schur_tol), json!(schur.max_rel_det), json!(v.schur_tol), json!(format!("{} draws", schur.draws))]);
    out.push(vec![json!("schur_block_spectrum"), json!(schur.max_abs_eigen <= v.schur_tol), json!(schur.max_abs_eigen), json!(v.schur_tol), Value::Null]);
    out.push(vec![json!("schur_sign"), json!(schur.sign_mismatches == 0), json!(schur.sign_mismatches), json!(0), Value::Null]);

    if !v.sweep.is_empty() {
        let dom = r.config.domain.spec();
        let limit = complexity_constrained(c, mu, &dom, &r.config.optimizer)?.value;
        let mut gaps = Vec::new();
        for &n in &v.sweep {
            let kr = kac_rice_integral(c, mu, &dom, n, &r.config.kacrice.options, split_seed(seed, 100 + n as u64))?;
            let gap = (kr.per_dimension - limit).abs();
            gaps.push(gap);
            out.push(vec![
                json!(format!("kacrice_gap_n{n}")),
                json!(!kr.boundary_warning),
                json!(gap),
                Value::Null,
                json!(format!("per_dimension {} limit {limit}", kr.per_dimension)),
            ]);
        }
        let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
        out.push(vec![json!("kacrice_gap_monotone"), json!(monotone), Value::Null, Value::Null, json!(gaps)]);
        let last = *gaps.last().expect("nonempty sweep");
        out.push(vec![json!("kacrice_gap_final"), json!(last <= v.sweep_gap), json!(last), json!(v.sweep_gap), Value::Null]);
        out.set("limit", json!(limit));
    }
    out.passed = out.rows.iter().all(|row| row[1] == json!(true));
    out.set("mu", json!(mu));
    out.set("n", json!(v.n));
    out.set("failed", json!(out.rows.iter().filter(|row| row[1] != json!(true)).count()));
    Ok(out)
}

pub fn kacrice(r: &Resolved) -> Result<Report> {
    let c = &r.correlator;
    let dom = r.config.domain.spec();
    let kc = &r.config.kacrice;
    let columns = vec![
        "mu", "n", "estimate", "stderr", "log_estimate", "per_dimension", "limit", "gap", "rho_lo",
        "rho_hi", "boundary_mass", "boundary_warning", "nodes", "draws",
    ];
    let mut out = Report::new("kacrice", columns);
    for mu in r.config.mu.values() {
        let limit = complexity_constrained(c, mu, &dom, &r.config.optimizer).ok().map(|v| v.value);
        for &n in &kc.dims {
            let k = kac_rice_integral(c, mu, &dom, n, &kc.options, split_seed(r.config.seed, n as u64))?;
            out.push(vec![
                json!(mu),
                json!(n),
                json!(k.estimate),
                json!(k.stderr),
                json!(k.log_estimate),
                json!(k.per_dimension),
                json!(limit),
                json!(limit.map(|l| (k.per_dimension - l).abs())),
                json!(k.rho_window.0),
                json!(k.rho_window.1),
                json!(k.boundary_mass),
                json!(k.boundary_warning),
                json!(k.nodes),
                json!(k.draws),
            ]);
        }
    }
    Ok(out)
}

pub fn census(r: &Resolved) -> Result<Report> {
    let c = &r.correlator;
    let dom = r.config.domain.spec();
    let cc = &r.config.census;
    let mu = r.config.mu.values()[0];
    let seeds: Vec<u64> = (0..cc.fields as u64).map(|i| split_seed(r.config.seed, i)).collect();
    let rows: Vec<Result<(usize, usize, usize, usize)>> = seeds
        .par_iter()
        .map(|&s| {
            let f = sample_field(c, mu, cc.dim, cc.features, s)?;
            let k = count_critical_points(&f, dom.e_lo, dom.e_hi, dom.r1, dom.r2, &cc.options)?;
            Ok((k.count_in, k.flagged, k.seeds, k.discarded_seeds))
        })
        .collect();
    let mut out = Report::new("census", vec!["field", "seed", "count_in", "flagged", "newton_seeds", "discarded"]);
    let mut counts = Vec::with_capacity(rows.len());
    for (i, (row, &s)) in rows.into_iter().zip(&seeds).enumerate() {
        let (n_in, flagged, tried, discarded) = row?;
        counts.push(n_in as f64);
        out.push(vec![json!(i), json!(s), json!(n_in), json!(flagged), json!(tried), json!(discarded)]);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = if counts.len() > 1 { counts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    out.set("mu", json!(mu));
    out.set("mean", json!(mean));
    out.set("stderr", json!((var / n).sqrt()));
    Ok(out)
}
