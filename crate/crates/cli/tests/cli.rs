use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn spec(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "specs", name].iter().collect();
    p.display().to_string()
}

fn grushin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin")).args(args).output().expect("run grushin")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn dist_cone_brackets_the_chord() {
    let o = grushin(&["dist", "--spec", &spec("cone.json"), "--from", "1,0", "--to", "0,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let exact = 4.0 * (std::f64::consts::PI / 8.0).sin();
    let (lo, hi) = (v["result"]["lower"].as_f64().unwrap(), v["result"]["upper"].as_f64().unwrap());
    assert!(lo <= exact && exact <= hi + 1e-12, "[{lo}, {hi}]");
    assert_eq!(v["tool"], "grushin-cli");
    assert_eq!(v["resolution"], 0.02);
    assert_eq!(v["spec_sha256"].as_str().unwrap().len(), 64);
    assert!(v["version"].is_string());
}

#[test]
fn dist_euclidean_and_witness_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("path.csv");
    let o = grushin(&[
        "dist",
        "--spec",
        &spec("euclidean.json"),
        "--from",
        "0,0",
        "--to",
        "3,4",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let (lo, hi) = (v["result"]["lower"].as_f64().unwrap(), v["result"]["upper"].as_f64().unwrap());
    assert!(lo <= 5.0 + 1e-9 && (5.0 - 1e-9..5.05).contains(&hi));
    assert!(std::fs::read_to_string(csv).unwrap().lines().count() >= 2);
}

#[test]
fn dist_negative_coordinates_and_refinement() {
    let o = grushin(&["dist", "--spec", &spec("cone.json"), "--from", "-1,0.5", "--to", "1,-0.5", "--refine", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["result"]["refinements"], 1);
}

#[test]
fn dist_usage_errors() {
    let o = grushin(&["dist", "--spec", &spec("cone.json"), "--from", "3,0", "--to", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("outside the bbox"));
    let o = grushin(&["dist", "--spec", &spec("cone.json"), "--from", "1,0,0", "--to", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = grushin(&["dist", "--spec", &spec("cone.json"), "--from", "1,x", "--to", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = grushin(&["dist", "--spec", "/nonexistent/spec.json", "--from", "1,0", "--to", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = grushin(&["dist", "--spec", &spec("cone.json"), "--from", "1,0", "--to", "0,1", "--resolution", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spec_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"dimension": 2, "beta": "x", "singular": [], "bbox": {"min": [0,0], "max": [1,1]}}"#, "beta", "line 1"),
        (
            "{\n\"dimension\": 2,\n\"beta\": 0.5,\n\"singular\": [{\"type\": \"point\", \"at\": [0, 0, 0]}],\n\"bbox\": {\"min\": [0,0], \"max\": [1,1]}\n}",
            "singular[0]",
            "line 4",
        ),
        (r#"{"dimension": 2, "beta": 1.5, "singular": [{"type": "point", "at": [0,0]}], "bbox": {"min": [0,0], "max": [1,1]}}"#, "beta", "[0,1)"),
        (r#"{"dimension": 2, "beta": 0.5, "singular": [], "bbox": {"min": [0,0], "max": [1,1]}}"#, "singular", "at least one"),
        (r#"{"dimension": 2, "beta": 0.5, "singular": [{"type": "point", "at": [0,0]}], "bbox": {"min": [1,0], "max": [0,1]}}"#, "bbox", "min exceeds max"),
        (r#"{"dimension": 2, "beta": 0.5, "singular": [{"type": "point", "at": [0,0]}], "bbox": {"min": [0], "max": [1]}}"#, "bbox", "2 coordinates"),
        (r#"{"dimension": 2, "beta": 0.5, "singular": [{"type": "point", "at": [0,0]}], "bbox": {"min": [0,0], "max": [1,1]}, "solver": {"pad": 0.1}}"#, "solver.pad", "smaller"),
        (r#"{"dimension": 2, "beta": 0.5, "singular": [{"type": "point", "at": [0,0]}], "bbox": {"min": [0,0], "max": [1,1]}, "solver": {"resolution": 0}}"#, "solver.resolution", "positive"),
        (r#"{"dimension": 2, "beta": 0.5, "singular": [{"type": "blob"}], "bbox": {"min": [0,0], "max": [1,1]}}"#, "singular[0]", "blob"),
        (r#"{"dimension": 2, "beta": 0.5, "singular": [{"type": "point", "at": [0,0]}], "bbox": {"min": [0,0], "max": [1,1]}, "colour": 1}"#, "colour", "unknown field"),
        ("{\"dimension\": 2,", "<root>", "EOF"),
    ];
    for (i, (text, field, needle)) in cases.iter().enumerate() {
        let path = write(dir.path(), &format!("s{i}.json"), text);
        let o = grushin(&["dist", "--spec", &path, "--from", "0.5,0.5", "--to", "0.6,0.6"]);
        assert_eq!(o.status.code(), Some(2), "case {i}");
        let e = stderr(&o);
        assert!(e.contains(&format!(": {field}")) && e.contains(needle), "case {i}: {e}");
    }
}

#[test]
fn verify_holder_passes_and_fails() {
    let o = grushin(&["verify", "holder", "--spec", &spec("v-axis.json"), "--H", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 1);
    assert!(v["resolution"].is_null());
    let o = grushin(&["verify", "holder", "--spec", &spec("v-axis.json"), "--H", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["result"]["violated"], true);
    let o = grushin(&["verify", "holder", "--spec", &spec("v-axis.json")]);
    assert!((json(&o)["result"]["h_claimed"].as_f64().unwrap() - 16.0).abs() < 1e-9);
    let o = grushin(&["verify", "holder", "--spec", &spec("v-axis.json"), "--H", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_holder_with_solver_records_resolution() {
    let o = grushin(&["verify", "holder", "--spec", &spec("v-axis.json"), "--solver", "--samples", "5", "--resolution", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["resolution"], 0.1);
    assert_eq!(v["result"]["bracketing"]["kind"], "solver");
}

#[test]
fn verify_quasisymmetry() {
    let o = grushin(&["verify", "qs", "--spec", &spec("v-axis.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"]["report"]["triples_tested"], 1000);
    assert_eq!(v["result"]["report"]["violations"], 0);
    assert_eq!(v["result"]["eta_strictly_decreasing"], true);
}

#[test]
fn verify_curvature_alpha() {
    for alpha in ["1", "2"] {
        let o = grushin(&["verify", "curvature", "--alpha", alpha]);
        assert_eq!(o.status.code(), Some(0));
        let v = json(&o);
        let a: f64 = alpha.parse().unwrap();
        for s in v["result"]["samples"].as_array().unwrap() {
            let x = s["x"].as_f64().unwrap();
            let k = s["numeric"].as_f64().unwrap();
            let exact = -a * (a + 1.0) / (x * x);
            assert!((k - exact).abs() <= 0.02 * exact.abs());
        }
        assert!(v["spec_sha256"].is_null());
    }
    assert_eq!(grushin(&["verify", "curvature"]).status.code(), Some(2));
}

#[test]
fn verify_curvature_conformal() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("k.csv");
    let o = grushin(&["verify", "curvature", "--spec", &spec("v-axis.json"), "--A", "3", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"]["closed_form_mismatches"], 0);
    let fit = v["result"]["report"]["a_fit"].as_f64().unwrap();
    assert!((fit - 2.0).abs() < 2e-3);
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("x,y,k_numeric"));
    let o = grushin(&["verify", "curvature", "--spec", &spec("v-axis.json"), "--A", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_doubling() {
    let o = grushin(&["verify", "doubling", "--spec", &spec("euclidean.json")]);
    assert_eq!(o.status.code(), Some(0));
    let d = json(&o)["result"]["d_estimate"].as_u64().unwrap();
    assert!((1..=9).contains(&d));
    let o = grushin(&["verify", "doubling", "--spec", &spec("v-axis.json"), "--max", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_nondoubling() {
    let o = grushin(&["verify", "nondoubling", "--eps", "1", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(v["result"]["count"].as_u64().unwrap() >= 436);
    assert_eq!(v["result"]["disjoint"], true);
    assert_eq!(grushin(&["verify", "nondoubling", "--eps", "1", "--n", "9"]).status.code(), Some(3));
    assert_eq!(grushin(&["verify", "nondoubling", "--eps", "0"]).status.code(), Some(2));
}

#[test]
fn decompose_default_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cubes.csv");
    let out = dir.path().join("report.json");
    let o = grushin(&[
        "decompose",
        "--spec",
        &spec("square-minus-line.json"),
        "--samples",
        "60",
        "--charts",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let r = &v["result"];
    assert_eq!(r["data"]["a"], 21.0);
    assert_eq!(r["report"]["passed"], true);
    assert_eq!(r["report"]["distance_violations"], 0);
    assert_eq!(r["charts"]["passed"], true);
    assert_eq!(r["cubes"].as_array().unwrap().len() as u64, r["report"]["cubes"].as_u64().unwrap());
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("cube,k,point,is_center"));
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "no temporary files left: {names:?}");
}

#[test]
fn decompose_with_whitney_balls() {
    let o = grushin(&["decompose", "--spec", &spec("square-minus-line.json"), "--samples", "60", "--verify-balls"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"]["enlarged"], true);
    let s = &v["result"]["whitney_balls"];
    assert_eq!(s["passed"], true);
    assert_eq!(s["diameter_violations"].as_array().unwrap().len(), 0);
    assert!(s["max_multiplicity"].as_u64().unwrap() >= 1);
}

#[test]
fn decompose_rejects_invalid_data() {
    let sq = spec("square-minus-line.json");
    for extra in [&["--delta", "0.2", "--c0", "0.06"][..], &["--a", "3"], &["--c1", "0.5"], &["--samples", "1"], &["--verify-balls", "--eps", "1"]] {
        let mut args = vec!["decompose", "--spec", &sq, "--samples", "20"];
        args.extend_from_slice(extra);
        assert_eq!(grushin(&args).status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn embed_cone_path_isometry() {
    let o = grushin(&["embed", "cone", "--spec", &spec("cone.json"), "--paths", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let c = &v["result"]["path_check"];
    assert_eq!(c["kind"], "path-isometry");
    assert_eq!(c["failures"], 0);
    assert_eq!(c["paths"].as_array().unwrap().len(), 20);
    let l = v["result"]["distortion"]["l_lower"].as_f64().unwrap();
    assert!((1.0..1.3).contains(&l));
    let o = grushin(&["embed", "cone", "--spec", &spec("v-axis.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn embed_grushin_chart_length_preservation() {
    let o = grushin(&["embed", "grushin-chart", "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let c = &json(&o)["result"]["path_check"];
    assert_eq!(c["kind"], "length-preservation");
    assert_eq!(c["failures"], 0);
    assert!(c["max_rel_error"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn embed_pipeline_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", r#"{"pipeline": [{"map": "cone", "beta": 0.5}, {"map": "project-xy"}]}"#);
    let o = grushin(&["embed", "--pipeline", &p, "--spec", &spec("cone.json"), "--samples", "60", "--pairs", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["command"], "embed pipeline");
    assert!(v["result"]["distortion"]["l_lower"].as_f64().unwrap() >= 1.0);
    let o = grushin(&["embed", "--pipeline", &p, "--spec", &spec("cone.json"), "--samples", "60", "--max-distortion", "1.0"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = write(dir.path(), "bad.json", r#"{"pipeline": [{"map": "twist"}]}"#);
    let o = grushin(&["embed", "--pipeline", &bad, "--spec", &spec("cone.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("twist"));
    assert_eq!(grushin(&["embed", "spiral", "--spec", &spec("cone.json")]).status.code(), Some(2));
    assert_eq!(grushin(&["embed", "project-xy"]).status.code(), Some(2));
    let left = write(
        dir.path(),
        "left.json",
        r#"{"dimension": 2, "beta": 0.5, "singular": [{"type": "point", "at": [-1,0]}], "bbox": {"min": [-2,-1], "max": [0,1]}}"#,
    );
    assert_eq!(grushin(&["embed", "grushin-chart", "--spec", &left]).status.code(), Some(2));
    assert_eq!(grushin(&["embed"]).status.code(), Some(2));
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_grushin"))
        .args(["verify", "nondoubling"])
        .env("GRUSHIN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("GRUSHIN_THREADS"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(grushin(&[]).status.code(), Some(2));
    assert_eq!(grushin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(grushin(&["--version"]).status.code(), Some(0));
}
