use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use matrixlens_core::MatrixValue;
use matrixlens_service::{Service, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matrixlens")).args(args).env("RUST_LOG", "off").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn count_files(dir: &Path) -> usize {
    fs::read_dir(dir).unwrap().count()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_splits_nine_to_one() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("ds");
    let summary: Value = serde_json::from_str(&ok(&["gen", "--count", "10", "--seed", "7", "--out", s(&out)])).unwrap();
    assert_eq!((summary["train"].as_u64(), summary["test"].as_u64()), (Some(9), Some(1)));
    for kind in ["images", "labels", "truth"] {
        assert_eq!(count_files(&out.join(kind).join("train")), 9, "{kind}");
        assert_eq!(count_files(&out.join(kind).join("test")), 1, "{kind}");
    }
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn detect_then_reconstruct_recovers_truth() {
    let d = tempfile::tempdir().unwrap();
    let ds = d.path().join("ds");
    ok(&["gen", "--count", "6", "--seed", "11", "--out", s(&ds)]);
    for i in 0..5 {
        let img = ds.join(format!("images/train/{i:06}.png"));
        let dets = d.path().join(format!("det/{i}.txt"));
        ok(&["detect", "--image", s(&img), "--out", s(&dets)]);
        let report: Value = serde_json::from_str(&ok(&["reconstruct", s(&dets), "--image", s(&img)])).unwrap();
        let truth: MatrixValue = serde_json::from_str(&fs::read_to_string(ds.join(format!("truth/train/{i:06}.json"))).unwrap()).unwrap();
        assert_eq!(report["values"], json!(truth.to_rows()), "sample {i}");
    }
}

#[test]
fn eval_of_oracle_output_is_perfect() {
    let d = tempfile::tempdir().unwrap();
    let ds = d.path().join("ds");
    ok(&["gen", "--count", "4", "--seed", "3", "--out", s(&ds)]);
    let pred = d.path().join("pred");
    for i in 0..4 {
        let img = ds.join(format!("images/train/{i:06}.png"));
        ok(&["detect", "--image", s(&img), "--out", s(&pred.join(format!("{i:06}.txt")))]);
    }
    let csv = d.path().join("pr.csv");
    let report: Value =
        serde_json::from_str(&ok(&["eval", "--pred", s(&pred), "--truth", s(&ds.join("labels/train")), "--pr-csv", s(&csv)])).unwrap();
    assert_eq!(report["map_mean"].as_f64(), Some(1.0));
    assert!(fs::read_to_string(&csv).unwrap().lines().count() > 1);
}

#[test]
fn two_by_two_trace_has_two_products() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a.json");
    fs::write(&a, "[[3, 8], [4, 6]]").unwrap();
    let t: Value = serde_json::from_str(&ok(&["trace", "--mode", "det", "--a", s(&a)])).unwrap();
    let steps = t["steps"].as_array().unwrap();
    let products = steps.iter().filter(|s| s["kind"] == "multiply").count();
    assert_eq!(products, 2);
    assert_eq!(t["result"]["value"], -14);
}

#[test]
fn render_writes_planned_frames() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a.json");
    fs::write(&a, "[[1, 2], [3, 4]]").unwrap();
    let trace = d.path().join("t.json");
    ok(&["trace", "--mode", "add", "--a", s(&a), "--b", s(&a), "--out", s(&trace)]);
    let frames = d.path().join("frames");
    let summary: Value = serde_json::from_str(&ok(&["render", s(&trace), "--out", s(&frames), "--fps", "4"])).unwrap();
    let n = summary["frame_count"].as_u64().unwrap() as usize;
    let svgs = fs::read_dir(&frames).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
    assert_eq!(svgs, n);
    assert!(frames.join("plan.json").is_file());
}

#[test]
fn failures_are_one_json_line_on_stderr() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a.json");
    fs::write(&a, "[[1, 2, 3]]").unwrap();
    for args in [
        vec!["trace", "--mode", "det", "--a", s(&a)],
        vec!["trace", "--mode", "pow", "--a", s(&a)],
        vec!["trace", "--mode", "det", "--a", "/nonexistent.json"],
    ] {
        let out = bin(&args);
        assert!(!out.status.success());
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        let doc: Value = serde_json::from_str(err.trim_end()).unwrap();
        assert_eq!(doc["command"], "trace");
        assert!(doc["error"].as_str().is_some_and(|e| !e.is_empty()));
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn cli_and_api_traces_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a.json");
    let b = d.path().join("b.json");
    fs::write(&a, "[[1, -2, 3], [0, 4, 5], [7, 8, -9]]").unwrap();
    fs::write(&b, "[[2, 0, 1], [1, 1, 1], [-3, 2, 0]]").unwrap();
    let app = Service::open(ServiceConfig { fps: 2, ..ServiceConfig::new(d.path().join("ws")) }).unwrap().into_router();
    for (name, path) in [("A", &a), ("B", &b)] {
        let req = Request::put(format!("/api/matrices/{name}")).body(Body::from(fs::read(path).unwrap())).unwrap();
        assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::CREATED);
    }

    for (mode, operands) in [("det", vec!["A"]), ("add", vec!["A", "B"]), ("mul", vec!["A", "B"])] {
        let req = Request::post("/api/jobs").body(Body::from(json!({ "mode": mode, "operands": operands }).to_string())).unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        assert_eq!(resp.status(), StatusCode::CREATED);
        let job: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
        let api = fs::read(d.path().join("ws").join(job["artifacts"]["trace"].as_str().unwrap())).unwrap();

        let out = d.path().join(format!("{mode}.json"));
        let mut args = vec!["trace", "--mode", mode, "--a", s(&a), "--out", s(&out)];
        if operands.len() == 2 {
            args.extend(["--b", s(&b)]);
        }
        ok(&args);
        assert_eq!(fs::read(&out).unwrap(), api, "{mode}");
    }
}
