use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hhs::fixtures::{bs12_window, factor_inclusion, fixture_b_product, free_product_z2_z3, path, raag_path};
use hhs::graph::ProductSpec;
use hhs::product::direct_product_structure;
use serde_json::{json, Value};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// The shipped input files, regenerated from the library.
fn corpus() -> Vec<(&'static str, Value)> {
    let (src, tgt, phi) = factor_inclusion(2);
    let four = ProductSpec::new(
        ["a", "b", "c", "d"].map(String::from).to_vec(),
        &[(0, 1), (1, 2), (2, 3)],
        (0..4).map(|_| hhs::fixtures::cyclic(2)).collect(),
        1,
    )
    .unwrap();
    vec![
        ("fixture-b.json", v(&fixture_b_product().to_json())),
        ("grid-5x7.json", v(&direct_product_structure(&path(5), &path(7)).0.to_json())),
        ("free-product-z2-z3.json", v(&free_product_z2_z3(2).to_json())),
        ("bs12-window-3.json", v(&bs12_window(3).to_json())),
        ("raag-path.json", v(&raag_path(2, 1).to_json())),
        ("path-a-b-c-d.json", v(&four.to_json())),
        (
            "factor-inclusion.json",
            json!({ "source": src.to_json(), "target": tgt.to_json(), "map": phi.to_json(&src, &tgt) }),
        ),
    ]
}

fn v<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap()
}

fn hhs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hhs")).args(args).output().expect("binary runs")
}

fn input(name: &str) -> String {
    corpus_dir().join(name).to_string_lossy().into_owned()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn corpus_is_current() {
    let bless = std::env::var_os("HHS_BLESS").is_some();
    for (name, value) in corpus() {
        let text = serde_json::to_string_pretty(&value).unwrap() + "\n";
        let p = corpus_dir().join(name);
        if bless {
            std::fs::create_dir_all(corpus_dir()).unwrap();
            std::fs::write(&p, &text).unwrap();
        }
        let shipped = std::fs::read_to_string(&p).unwrap_or_else(|_| panic!("{name} missing; rerun with HHS_BLESS=1"));
        assert!(shipped == text, "{name} is stale; rerun with HHS_BLESS=1");
    }
}

#[test]
fn audit_passes_and_is_deterministic() {
    let f = input("fixture-b.json");
    let a = hhs(&["audit", &f, "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let doc = stdout_json(&a);
    assert_eq!(doc["status"], "pass");
    let rows = doc["report"]["realize_sample"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["pass"] == true));
    let b = hhs(&["audit", &f, "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "x"}"#).unwrap();
    let o = hhs(&["audit", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["status"], "schema-error");
    assert_eq!(hhs(&["audit", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(hhs(&["examples", "no-such-fixture"]).status.code(), Some(2));
    assert_eq!(hhs(&["distance-formula", &input("grid-5x7.json"), "--s", "0"]).status.code(), Some(2));
}

#[test]
fn combine_writes_renderings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fp");
    let o = hhs(&["combine", &input("free-product-z2-z3.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = stdout_json(&o);
    assert_eq!(doc["report"]["audit"]["pass"], true);
    assert!(out.join("report.json").exists());
    let dots: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".dot"))
        .collect();
    // one coned tree per support, the top element's tree and the Hasse diagram
    assert_eq!(dots.len(), 3, "{dots:?}");
    let d = hhs(&["combine", &input("free-product-z2-z3.json"), "--format", "dot"]);
    let text = String::from_utf8(d.stdout).unwrap();
    assert_eq!(text.matches("graph").count(), 3);
}

#[test]
fn combine_rejects_bs12() {
    let o = hhs(&["combine", &input("bs12-window-3.json")]);
    assert_eq!(o.status.code(), Some(1));
    let doc = stdout_json(&o);
    assert_eq!(doc["status"], "hypothesis-failure");
    assert_eq!(doc["witness"]["ComparisonNotUniform"]["constant"], 16.0);
}

#[test]
fn product_certifies_the_raag_path() {
    let o = hhs(&["product", &input("raag-path.json")]);
    assert_eq!(o.status.code(), Some(0));
    let doc = stdout_json(&o);
    let levels = doc["report"]["chain"]["levels"].as_array().unwrap();
    assert!(levels.iter().any(|l| l["kind"] == "Amalgam"));
    assert!(levels.iter().all(|l| l["pass"] == true));
}

#[test]
fn product_reports_unsupported_splittings() {
    let o = hhs(&["product", &input("path-a-b-c-d.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout_json(&o)["witness"]["Unsupported"]["pivot"] == "b");
}

#[test]
fn distance_formula_table() {
    let o = hhs(&["distance-formula", &input("grid-5x7.json"), "--s", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let fits = stdout_json(&o)["report"]["fits"].clone();
    assert_eq!(fits[0]["k"], 1.0);
    assert_eq!(fits[0]["c"], 0.0);
    assert_eq!(fits.as_array().unwrap().len(), 2);
}

#[test]
fn probe_on_a_factor_inclusion() {
    let o = hhs(&["probe-theorem-b", &input("factor-inclusion.json")]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o)["report"].clone();
    assert_eq!(r["c5_outside_diam"], 0);
    assert_eq!(r["eta_ok"], true);
}

#[test]
fn example_fixture_b() {
    let o = hhs(&["examples", "fixture-b-product"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["report"]["elements"], 5);
}

#[test]
fn example_bs12_is_rejected() {
    let o = hhs(&["examples", "bs12-window", "--radius", "4"]);
    assert_eq!(o.status.code(), Some(1));
    let w = stdout_json(&o)["witness"]["ComparisonNotUniform"].clone();
    assert!(w["constant"].as_f64().unwrap() >= 16.0);
    let at4 = w["profile"].as_array().unwrap().iter().find(|p| p[0] == 4).unwrap()[1].as_f64().unwrap();
    assert!(at4 >= 16.0);
}

#[test]
fn example_hagen_grows() {
    let o = hhs(&["examples", "hagen-f2", "--radius", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o)["report"].clone();
    assert_eq!(r["rows"].as_array().unwrap().len(), 5);
    assert_eq!(r["c1_strictly_increasing"], true);
}
