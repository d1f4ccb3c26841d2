//! End-to-end runs of every subcommand against the shipped example files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiclab"))
        .args(args)
        .output()
        .unwrap()
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad report: {e}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn entropy_end_to_end() {
    let out = run(&["entropy", "--set", &data("cantor3.set")]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["command"], "entropy");
    let dim = v["results"]["dimension"].as_f64().unwrap();
    assert!((dim - 2f64.ln() / 3f64.ln()).abs() < 1e-10);
}

#[test]
fn entropy_missing_file_is_usage_error() {
    let out = run(&["entropy", "--set", &data("missing.set")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flag_is_usage_error() {
    let out = run(&["entropy", "--set", &data("cantor3.set"), "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn depth_over_cap_is_usage_error() {
    let out = run(&["cover", "--set", &data("cantor3.set"), "--depth", "25"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cover_end_to_end() {
    let out = run(&["cover", "--set", &data("goldenmean2.set"), "--depth", "5"]);
    assert!(out.status.success());
    let v = json_of(&out);
    // golden mean: F_{5+2} = 13 admissible words of length 5
    assert_eq!(v["results"]["count"], 13);
}

#[test]
fn classify_end_to_end() {
    let out = run(&["classify", "--set", &data("zeroplus3.set")]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["results"]["finite"], false);
    assert_eq!(v["results"]["perfect"], false);
    assert_eq!(v["results"]["transitive"], false);
}

#[test]
fn diffset_end_to_end() {
    let out = run(&[
        "diffset",
        "--set",
        &data("cantor3.set"),
        "--depth",
        "6",
        "--resolution",
        "729",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    // Cantor minus Cantor covers the circle
    assert_eq!(v["results"]["full"], true);
}

#[test]
fn localdiff_end_to_end_with_inclusion_check() {
    let out = run(&[
        "localdiff",
        "--set",
        &data("cantor3.set"),
        "--b",
        "2",
        "--check-inclusion",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["results"]["inclusion_violations"], 0);
}

#[test]
fn localdiff_rejects_inadmissible_point() {
    let out = run(&[
        "localdiff",
        "--set",
        &data("cantor3.set"),
        "--point",
        ":1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn transform_law_end_to_end() {
    let out = run(&[
        "transform-law",
        "--set",
        &data("cantor3.set"),
        "--map",
        &data("double_shift.map"),
        "--point",
        ":02",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["results"]["verdict"], "Pass");
}

#[test]
fn full_circle_end_to_end() {
    let out = run(&[
        "full-circle",
        "--set",
        &data("cantor3.set"),
        "--b",
        "2",
        "--depths",
        "8,10",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["results"]["monotone"], true);
}

#[test]
fn full_circle_rejects_commensurable_base() {
    let out = run(&[
        "full-circle",
        "--set",
        &data("fullshift2.set"),
        "--b",
        "4",
        "--depths",
        "8,10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prop_dim_end_to_end() {
    let out = run(&[
        "prop-dim",
        "--set",
        &data("cantor3.set"),
        "--map",
        &data("logistic.map"),
        "--b",
        "2",
        "--depth",
        "10",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["results"]["holds"], true);
}

#[test]
fn affine_search_end_to_end() {
    let out = run(&[
        "affine-search",
        "--set",
        &data("cantor3.set"),
        "--depth",
        "6",
        "--qmax",
        "3",
        "--rmax",
        "1.0",
        "--tdenom",
        "27",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert!(v["results"]["survivors"].as_array().unwrap().iter().any(|c| {
        c["r_num"] == 1 && c["r_den"] == 3 && c["t"] == 0.0
    }));
}

#[test]
fn measure_dim_end_to_end() {
    let out = run(&[
        "measure-dim",
        "--set",
        &data("fullshift2.set"),
        "--depth",
        "6",
        "--samples",
        "100000",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    let est = v["results"]["estimate"]["dimension"].as_f64().unwrap();
    assert!((est - 1.0).abs() < 0.02, "estimate {est}");
}

#[test]
fn measure_dim_gain_end_to_end() {
    let out = run(&[
        "measure-dim",
        "--set",
        &data("cantor3.set"),
        "--map",
        &data("logistic.map"),
        "--depth",
        "6",
        "--samples",
        "200000",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert!(v["results"]["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn measure_dim_rejects_affine_map_for_gain() {
    let out = run(&[
        "measure-dim",
        "--set",
        &data("cantor3.set"),
        "--map",
        &data("identity.map"),
        "--samples",
        "10000",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = run(&[
            "localdiff",
            "--set",
            &data("cantor3.set"),
            "--b",
            "2",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn summary_flag_prints_text_not_json() {
    let out = run(&[
        "entropy",
        "--set",
        &data("cantor3.set"),
        "--summary",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("dimension"));
    assert!(!text.contains('{'));
}
