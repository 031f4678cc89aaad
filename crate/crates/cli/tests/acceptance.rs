//! Acceptance suite: runs `curvlab suite` end to end and prints one
//! pass/fail line per criterion.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn curvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab"))
        .args(args)
        .output()
        .expect("spawn curvlab")
}

/// Stated tolerance for each identity id.
const STATED: &[(&str, f64)] = &[
    ("curvature-known-scalar", 1e-9),
    ("flat-riemann", 1e-12),
    ("fd-scalar", 1e-5),
    ("catalog-self-check", 0.0),
    ("sigma2-two-routes", 1e-11),
    ("sigma2-known", 1e-9),
    ("fd-sigma2", 1e-5),
    ("gamma-fd", 1e-5),
    ("lambda-fd", 1e-5),
    ("gamma-of-metric", 1e-10),
    ("lambda-of-metric", 1e-10),
    ("adjoint-gamma", 1e-8),
    ("adjoint-lambda", 1e-7),
    ("eq9-trace", 1e-9),
    ("eq11-trace-of-one", 1e-8),
    ("eq12-div-of-one", 1e-7),
    ("lemma1-extended", 1e-9),
    ("thm2-static-extended", 1e-9),
    ("cpe-extended-exact-zero", 1e-10),
    ("static-extended-exact-zero", 1e-10),
    ("eq13-einstein-closed-form", 1e-9),
    ("einstein-closed-form-refusal", 0.0),
    ("corollary1-kernel", 1e-8),
    ("corollary1-meanzero", 1e-9),
    ("kernel-gram", 1.0),
    ("eq7-rayleigh", 1e-7),
    ("eigen-equations", 1e-10),
    ("static-branch-ricci-flat", 1e-12),
    ("static-branch-einstein", 1e-8),
    ("negative-control-trace", 1.0),
    ("negative-control-cpe", 1.0),
];

/// (model, identity) pairs each criterion must cover.
fn required(criterion: u8) -> Vec<(&'static str, &'static str)> {
    let pt = "perturbed_torus_3";
    let each = |models: &[&'static str], ids: &[&'static str]| {
        let mut v = Vec::new();
        for m in models {
            for i in ids {
                v.push((*m, *i));
            }
        }
        v
    };
    match criterion {
        1 => [
            each(&["s2_r1", "s3_r1", "s4_r1", "s3_r2"], &["curvature-known-scalar"]),
            each(&["flat_torus_2", "flat_torus_3"], &["flat-riemann"]),
            each(&["s2_r1"], &["fd-scalar"]),
        ]
        .concat(),
        2 => [
            each(&[pt], &["sigma2-two-routes"]),
            each(&["s3_r1", "s4_r1", "flat_torus_3"], &["sigma2-known"]),
        ]
        .concat(),
        3 => [
            each(&[pt], &["gamma-fd", "lambda-fd"]),
            each(
                &[
                    "euclidean_2", "euclidean_3", "flat_torus_2", "flat_torus_3", "s2_r1", "s2_r2",
                    "s3_r1", "s3_r2", "s4_r1", "s4_r2", "s2xs2_r1_r1", "s2xs2_r1_r2", "poincare_2",
                    "poincare_3", pt,
                ],
                &["gamma-of-metric", "lambda-of-metric"],
            ),
        ]
        .concat(),
        4 => each(
            &["flat_torus_3", pt, "s2_r1", "s2xs2_r1_r1"],
            &["adjoint-gamma", "adjoint-lambda"],
        ),
        5 => each(&[pt, "s2xs2_r1_r1", "s2xs2_r1_r2"], &["eq9-trace"]),
        6 => each(&[pt], &["eq11-trace-of-one", "eq12-div-of-one"]),
        7 => [
            each(&[pt, "s2xs2_r1_r2"], &["lemma1-extended", "thm2-static-extended"]),
            each(
                &["s2_r1", "flat_torus_3"],
                &["cpe-extended-exact-zero", "static-extended-exact-zero"],
            ),
        ]
        .concat(),
        8 => [
            each(&["s3_r1", "s4_r1", "s2xs2_r1_r1"], &["eq13-einstein-closed-form"]),
            each(&["s2xs2_r1_r2"], &["einstein-closed-form-refusal"]),
        ]
        .concat(),
        9 => each(
            &["s2_r1", "s2_r2", "s3_r1", "s3_r2"],
            &[
                "corollary1-kernel",
                "corollary1-meanzero",
                "kernel-gram",
                "eq7-rayleigh",
                "eigen-equations",
            ],
        ),
        10 => [
            each(&["flat_torus_2", "flat_torus_3"], &["static-branch-ricci-flat"]),
            each(&["s2_r1", "s3_r1", "s4_r1"], &["static-branch-einstein"]),
            each(&["s2xs2_r1_r2"], &["negative-control-trace", "negative-control-cpe"]),
        ]
        .concat(),
        _ => Vec::new(),
    }
}

/// Problems with one criterion's reports; empty means pass.
fn check_criterion(criterion: u8, reports: &[Value]) -> Vec<String> {
    let stated: BTreeMap<&str, f64> = STATED.iter().copied().collect();
    let mine: Vec<&Value> = reports
        .iter()
        .filter(|r| r["criterion"].as_u64() == Some(criterion as u64))
        .collect();
    let mut problems = Vec::new();
    for (model, id) in required(criterion) {
        if !mine.iter().any(|r| r["model"] == model && r["identity"] == id) {
            problems.push(format!("missing {model}/{id}"));
        }
    }
    for r in &mine {
        let id = r["identity"].as_str().unwrap_or_default();
        let tol = r["tolerance"].as_f64().unwrap_or(f64::NAN);
        let res = r["max_residual"].as_f64().unwrap_or(f64::INFINITY);
        let label = format!("{}/{id}", r["model"].as_str().unwrap_or_default());
        match stated.get(id) {
            Some(&s) if tol > s => problems.push(format!("{label}: tolerance {tol:e} looser than {s:e}")),
            None => problems.push(format!("{label}: unexpected identity")),
            _ => {}
        }
        if r["status"] != "pass" || r["pass"] != true || res.is_nan() || res > tol {
            problems.push(format!("{label}: residual {res:e} > {tol:e} ({})", r["detail"]));
        }
    }
    if mine.is_empty() {
        problems.push("no reports".into());
    }
    problems
}

fn write_config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn acceptance() {
    let first = curvlab(&["suite", "--json"]);
    let second = curvlab(&["suite", "--json"]);
    let bundle: Value = serde_json::from_slice(&first.stdout).expect("suite emits a JSON bundle");
    let reports = bundle["reports"].as_array().expect("reports array").clone();

    let mut lines = Vec::new();
    let mut all_ok = true;
    for c in 1..=10u8 {
        let problems = check_criterion(c, &reports);
        all_ok &= problems.is_empty();
        lines.push(match problems.is_empty() {
            true => format!("criterion {c:>2}: PASS"),
            false => format!("criterion {c:>2}: FAIL  {}", problems.join("; ")),
        });
    }

    // Determinism and exit codes.
    let mut problems = Vec::new();
    if first.stdout != second.stdout {
        problems.push("bundles differ between runs".to_string());
    }
    if first.status.code() != Some(0) || bundle["summary"]["all_pass"] != true {
        problems.push(format!("default suite exit {:?}", first.status.code()));
    }
    let strict = write_config("criteria = [6]\n[tolerances]\n\"eq12-div-of-one\" = 1e-30\n");
    let out = curvlab(&["suite", "--json", "--config", strict.path().to_str().unwrap()]);
    if out.status.code() != Some(1) {
        problems.push(format!("controlled failure exit {:?}, expected 1", out.status.code()));
    }
    let flat = write_config("models = [\"flat_torus_2\", \"flat_torus_3\"]\n");
    let out = curvlab(&["suite", "--config", flat.path().to_str().unwrap()]);
    if out.status.code() != Some(0) {
        problems.push(format!("flat-torus suite exit {:?}, expected 0", out.status.code()));
    }
    let broken = write_config("seed = 3\n[tolerances\n");
    let out = curvlab(&["suite", "--config", broken.path().to_str().unwrap()]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    if out.status.code() != Some(2) || !stderr.contains("line 2") {
        problems.push(format!("bad config exit {:?}: {stderr}", out.status.code()));
    }
    let out = curvlab(&["identities", "--model", "no_such_model"]);
    if out.status.code() != Some(2) {
        problems.push(format!("unknown model exit {:?}, expected 2", out.status.code()));
    }
    all_ok &= problems.is_empty();
    lines.push(match problems.is_empty() {
        true => "criterion 11: PASS".to_string(),
        false => format!("criterion 11: FAIL  {}", problems.join("; ")),
    });

    println!();
    for l in &lines {
        println!("{l}");
    }
    assert!(all_ok, "acceptance failures:\n{}", lines.join("\n"));
}

#[test]
fn div_of_one_gate_follows_measured_residual() {
    let cfg = write_config("criteria = [6]\n[tolerances]\n\"eq12-div-of-one\" = 1e-12\n");
    let out = curvlab(&["suite", "--json", "--config", cfg.path().to_str().unwrap()]);
    let bundle: Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = bundle["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["identity"] == "eq12-div-of-one")
        .unwrap();
    let res = r["max_residual"].as_f64().unwrap();
    let expected = if res <= 1e-12 { 0 } else { 1 };
    assert_eq!(out.status.code(), Some(expected), "residual {res:e}");
}
