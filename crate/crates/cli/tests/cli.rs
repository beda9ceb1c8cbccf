use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn iris() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/iris.csv")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn fit_iris(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["fit", iris(), "--out", out.to_str().unwrap(), "--grid", "2..5"];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "fit failed: {}", text(&o.stderr));
    o
}

#[test]
fn fit_writes_all_outputs_and_inspect_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fit_iris(dir.path(), &[]);
    let stdout = text(&o.stdout);
    assert!(stdout.contains("P* = "), "{stdout}");
    assert!(stdout.contains("3 instance clusters"), "{stdout}");
    for f in ["model.json", "trace.csv", "summary.txt", "heatmap.svg"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("step,move,criterion"));
    assert!(lines.next().unwrap().starts_with("0,initial,"));

    let model = dir.path().join("model.json");
    let o = run(&["inspect", model.to_str().unwrap(), "--data", iris()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("criterion check: ok"));
    assert!(stdout.contains("count check"));
}

#[test]
fn quiet_fit_writes_only_the_model() {
    let dir = tempfile::tempdir().unwrap();
    fit_iris(dir.path(), &["--quiet"]);
    assert!(dir.path().join("model.json").exists());
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn repeated_fits_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    fit_iris(a.path(), &["--quiet"]);
    fit_iris(b.path(), &["--quiet", "--threads", "2"]);
    let x = fs::read(a.path().join("model.json")).unwrap();
    let y = fs::read(b.path().join("model.json")).unwrap();
    assert!(x == y, "model.json differs between runs");
}

#[test]
fn empty_dataset_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.csv");
    fs::write(&input, "#id,a,b\n").unwrap();
    let o = run(&["fit", input.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = text(&o.stderr);
    assert!(err.contains("error [ingest]"), "{err}");
    assert!(err.contains("dataset has zero observations"), "{err}");
}

#[test]
fn truncated_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fit_iris(dir.path(), &["--quiet"]);
    let model = dir.path().join("model.json");
    let full = fs::read_to_string(&model).unwrap();
    fs::write(&model, &full[..full.len() / 2]).unwrap();
    let o = run(&["inspect", model.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("error [model]"), "{}", text(&o.stderr));
}

#[test]
fn tampered_criterion_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fit_iris(dir.path(), &["--quiet"]);
    let model = dir.path().join("model.json");
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    let total = doc["criterion"]["total"].as_f64().unwrap();
    doc["criterion"]["total"] = serde_json::json!(total + 1.0);
    fs::write(&model, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = run(&["inspect", model.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn inspect_detects_a_different_dataset() {
    let dir = tempfile::tempdir().unwrap();
    fit_iris(dir.path(), &["--quiet"]);
    let raw = fs::read_to_string(iris()).unwrap();
    let edited: Vec<&str> = raw.lines().filter(|l| !l.starts_with("i7,")).collect();
    let other = dir.path().join("other.csv");
    fs::write(&other, edited.join("\n")).unwrap();
    let o = run(&["inspect", dir.path().join("model.json").to_str().unwrap(), "--data", other.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("error [verify]"), "{}", text(&o.stderr));
}

#[test]
fn report_rerenders_from_the_model() {
    let dir = tempfile::tempdir().unwrap();
    fit_iris(dir.path(), &[]);
    let before = fs::read(dir.path().join("heatmap.svg")).unwrap();
    let out = dir.path().join("again");
    let o = run(&["report", dir.path().join("model.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(fs::read(out.join("heatmap.svg")).unwrap(), before);
    assert_eq!(
        fs::read(out.join("summary.txt")).unwrap(),
        fs::read(dir.path().join("summary.txt")).unwrap()
    );
}

#[test]
fn bad_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["fit", iris(), "--out", dir.path().to_str().unwrap(), "--grid", "5..2"]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("error [config]"), "{}", text(&o.stderr));
}
