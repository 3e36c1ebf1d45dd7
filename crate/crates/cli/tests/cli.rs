use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_affine-polya"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn help_documents_flags() {
    let cases: [(&str, &[&str]); 7] = [
        ("constants", &["--kind", "--n", "--p", "--q"]),
        ("energy", &["--input", "--p", "--directions", "--kind"]),
        ("rearrange", &["--input", "--out", "--scheme"]),
        ("sample", &["--spec", "--out"]),
        ("minkowski", &["--measure", "--p", "--tol", "--max-iter"]),
        ("petty", &["--body", "--p", "--directions"]),
        ("verify", &["--suite", "--corpus", "--out", "--mn"]),
    ];
    for (sub, flags) in cases {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert!(out.status.success(), "{sub}");
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in flags.iter().chain(&["--threads", "--seed", "--strict"]) {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
    let out = bin().args(["verify", "--help"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for s in ["chain", "faber_krahn", "moser_trudinger", "starequal", "all"] {
        assert!(text.contains(s), "{s}");
    }
}

#[test]
fn constants_print_seventeen_digits() {
    let out = bin().args(["constants", "--kind", "kappa", "--n", "2"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "3.1415926535897931");
    let out = bin().args(["constants", "--kind", "c_np", "--n", "2", "--p", "2"]).output().unwrap();
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
}

#[test]
fn usage_and_io_exit_codes() {
    assert_eq!(bin().arg("bogus").output().unwrap().status.code(), Some(2));
    let out = bin().args(["constants", "--kind", "kappa", "--n", "2", "--nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["constants", "--kind", "nonsense", "--n", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["minkowski", "--measure", "/nonexistent/m.json", "--p", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn minkowski_square() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("square.json"),
        r#"{"dim": 2, "directions": [[1, 0], [0, 1], [-1, 0], [0, -1]], "weights": [0.5, 0.5, 0.5, 0.5]}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["minkowski", "--measure", "square.json", "--p", "2"]);
    assert!(out.status.success());
    let v = json(&out);
    for h in v["support"].as_array().unwrap() {
        assert!((h.as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    assert!(v["residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["converged"], true);
    assert_eq!(v["config"]["subcommand"], "minkowski");
    assert_eq!(v["config"]["p"], 2.0);

    std::fs::write(
        dir.path().join("half.json"),
        r#"{"dim": 2, "directions": [[1, 0], [0, 1]], "weights": [1, 1]}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["minkowski", "--measure", "half.json", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_energy_rearrange_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("g.json"),
        r#"{"function": {"family": "gaussian", "params": {}}, "grid": {"dim": 2, "lo": -4, "hi": 4, "cells": 128}}"#,
    )
    .unwrap();
    assert!(run(dir.path(), &["sample", "--spec", "g.json", "--out", "gs.json"]).status.success());
    assert!(dir.path().join("gs.bin").exists());
    let direct = json(&run(dir.path(), &["energy", "--input", "g.json", "--kind", "grad"]));
    let stored = json(&run(dir.path(), &["energy", "--input", "gs.json", "--kind", "grad"]));
    assert_eq!(direct["value"], stored["value"]);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    assert!((stored["value"].as_f64().unwrap() - sqrt_pi).abs() / sqrt_pi < 0.015);

    assert!(run(dir.path(), &["rearrange", "--input", "gs.json", "--out", "gr.json"]).status.success());
    let plus = json(&run(dir.path(), &["energy", "--input", "gs.json"]))["value"].as_f64().unwrap();
    let star = json(&run(dir.path(), &["energy", "--input", "gr.json"]))["value"].as_f64().unwrap();
    assert!(star <= plus * 1.001, "{star} {plus}");
}

#[test]
fn petty_on_a_square() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sq.json"),
        r#"{"dim": 2, "normals": [[1, 0], [0, 1], [-1, 0], [0, -1]], "support": [1, 1, 1, 1]}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["--strict", "petty", "--body", "sq.json", "--p", "2"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["kind"], "petty");
    assert_eq!(v["pass"], true);
    assert!(v["ratio"].as_f64().unwrap() < 1.0);
}

fn tiny_corpus(dir: &Path) {
    std::fs::write(
        dir.join("c.json"),
        r#"[{"id": "g", "function": {"family": "gaussian", "params": {}}, "grid": {"dim": 2, "lo": -4, "hi": 4, "cells": 96}},
            {"id": "cone", "function": {"family": "cone", "params": {}}, "grid": {"dim": 2, "lo": -1.5, "hi": 1.5, "cells": 96}}]"#,
    )
    .unwrap();
}

#[test]
fn verify_strict_exit_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    tiny_corpus(dir.path());
    let args = ["verify", "--suite", "chain", "--corpus", "c.json", "--out", "r.json"];
    let out = run(dir.path(), &args);
    assert!(out.status.success());
    let first = std::fs::read(dir.path().join("r.json")).unwrap();
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(first, std::fs::read(dir.path().join("r.json")).unwrap());
    let reports: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 6);
    assert_eq!(reports[0]["metadata"]["config"]["suite"], "chain");

    // thread count does not change the bytes apart from the recorded config
    let out = run(dir.path(), &["--threads", "3", "verify", "--suite", "chain", "--corpus", "c.json", "--out", "r3.json"]);
    assert!(out.status.success());
    let mut three: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("r3.json")).unwrap()).unwrap();
    let mut one = reports.clone();
    for r in three.as_array_mut().unwrap().iter_mut().chain(one.as_array_mut().unwrap()) {
        r["metadata"].as_object_mut().unwrap().remove("config");
    }
    assert_eq!(one, three);

    // an m_n that is far too small fails every Moser–Trudinger report
    let mt = ["verify", "--suite", "moser_trudinger", "--corpus", "c.json", "--out", "m.json", "--mn", "1.0001"];
    assert_eq!(run(dir.path(), &mt).status.code(), Some(0));
    let strict: Vec<&str> = std::iter::once("--strict").chain(mt).collect();
    assert_eq!(run(dir.path(), &strict).status.code(), Some(1));
    let no_mn = ["--strict", "verify", "--suite", "moser_trudinger", "--corpus", "c.json", "--out", "m.json"];
    assert_eq!(run(dir.path(), &no_mn).status.code(), Some(2));
}
