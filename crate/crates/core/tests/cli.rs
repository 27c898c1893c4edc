use std::path::Path;
use std::process::Command;

use landscape::cli::{run, EXIT_CONFIG, EXIT_FAILED, EXIT_OK};
use serde_json::Value;
use tempfile::TempDir;

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

/// `(exit code, stdout, stderr)`.
fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["landscape"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(stdout: &str) -> Value {
    serde_json::from_str(stdout).unwrap()
}

#[test]
fn validate_exit_codes() {
    let d = TempDir::new().unwrap();
    let log = write(&d, "log.json", r#"{"correlator": {"kind": "log", "eps": 1.0}}"#);
    let (code, out, _) = invoke(&["validate", "--config", &log]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&out)["summary"]["overall"], true);

    let sinh = write(&d, "sinh.json", r#"{"correlator": {"kind": "sinh"}}"#);
    let (code, out, _) = invoke(&["validate", "--config", &sinh]);
    assert_eq!(code, EXIT_OK);
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    let row = |n: &str| rows.iter().find(|r| r["name"] == n).unwrap().clone();
    assert_eq!(row("btbd3")["passed"], false);
    assert_eq!(row("btbd")["passed"], true);

    let bad = write(&d, "bad.json", r#"{"correlator": {"kind": "power", "gamma": 1.5}}"#);
    let (code, _, err) = invoke(&["validate", "--config", &bad]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("gamma"));
}

#[test]
fn config_errors_exit_with_two() {
    let d = TempDir::new().unwrap();
    let unknown = write(&d, "u.json", r#"{"correlator": {"kind": "log"}, "mus": [1]}"#);
    assert_eq!(invoke(&["complexity", "--config", &unknown]).0, EXIT_CONFIG);
    assert_eq!(invoke(&["complexity", "--config", "/nonexistent/file.json"]).0, EXIT_CONFIG);
    assert_eq!(invoke(&["complexity"]).0, EXIT_CONFIG);
    assert_eq!(invoke(&["frobnicate"]).0, EXIT_CONFIG);
    let solver = write(&d, "s.json", r#"{"correlator": {"kind": "log"}, "solver": "newton"}"#);
    assert_eq!(invoke(&["complexity", "--config", &solver]).0, EXIT_CONFIG);
}

#[test]
fn complexity_sweep_is_monotone_and_reaches_zero() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "c.json", r#"{"correlator": {"kind": "log"}, "mu": [0.5, 1.0, 1.41421356, 2.0]}"#);
    let (code, out, _) = invoke(&["complexity", "--config", &cfg]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    let values: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{values:?}");
    assert!(values[3].abs() < 1e-9);
    assert_eq!(v["config"]["optimizer"]["grid_rho"], 96);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn zero_mu_without_outer_radius_is_a_row_error() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "c.json", r#"{"correlator": {"kind": "log"}, "mu": [0.0, 1.0]}"#);
    let (code, out, _) = invoke(&["complexity", "--config", &cfg]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert_eq!(v["rows"][0]["error"], "domain error: R2 required when mu=0");
    assert!(v["rows"][1]["value"].is_number());
}

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        &d,
        "k.json",
        r#"{"correlator": {"kind": "atomic", "atoms": [{"weight": 1.0, "scale": 1.0}]},
            "domain": {"r2": 3.0},
            "kacrice": {"dims": [2, 3], "options": {"goe_samples": 300, "rho_panels": 6, "u_panels": 6}},
            "census": {"fields": 6, "features": 512, "options": {"grid_density": 24}},
            "seed": 17}"#,
    );
    for cmd in ["kacrice", "census", "optimize"] {
        let mut outs = vec![];
        for workers in ["1", "2", "1"] {
            let path = d.path().join(format!("{cmd}-{workers}-{}.csv", outs.len()));
            let p = path.display().to_string();
            let (code, _, err) = invoke(&[cmd, "--config", &cfg, "--workers", workers, "--out", &p, "--format", "csv"]);
            assert_eq!(code, EXIT_OK, "{err}");
            outs.push(std::fs::read(&path).unwrap());
        }
        // the echoed config differs only in the output path
        let strip = |b: &[u8]| -> String {
            String::from_utf8(b.to_vec()).unwrap().lines().filter(|l| !l.starts_with("# config")).collect::<Vec<_>>().join("\n")
        };
        assert_eq!(strip(&outs[0]), strip(&outs[1]), "{cmd}");
        assert_eq!(strip(&outs[0]), strip(&outs[2]), "{cmd}");
    }
    let a = invoke(&["census", "--config", &cfg]).1;
    let b = invoke(&["census", "--config", &cfg]).1;
    assert_eq!(a, b);
    let other = invoke(&["census", "--config", &cfg, "--seed", "18"]).1;
    assert_eq!(json(&other)["config"]["seed"], 18);
}

#[test]
fn verify_passes_on_the_default_model_and_fails_when_impossible() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        &d,
        "v.json",
        r#"{"correlator": {"kind": "log"}, "mu": 1.0, "verify": {"covariance_samples": 20000, "schur_draws": 500}}"#,
    );
    let (code, out, _) = invoke(&["verify", "--config", &cfg]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(json(&out)["summary"]["failed"], 0);

    let strict = write(
        &d,
        "s.json",
        r#"{"correlator": {"kind": "log"}, "verify": {"covariance_samples": 2000, "schur_draws": 50, "covariance_z": 0.0}}"#,
    );
    assert_eq!(invoke(&["verify", "--config", &strict]).0, EXIT_FAILED);
}

#[test]
fn binary_reports_exit_codes() {
    let d = TempDir::new().unwrap();
    let bin = Path::new(env!("CARGO_BIN_EXE_landscape"));
    let good = write(&d, "g.json", r#"{"correlator": {"kind": "log"}}"#);
    let bad = write(&d, "b.json", r#"{"correlator": {"kind": "power", "gamma": 1.5}}"#);
    let status = |cfg: &str| Command::new(bin).args(["validate", "--config", cfg]).output().unwrap().status.code();
    assert_eq!(status(&good), Some(0));
    assert_eq!(status(&bad), Some(2));
}
