use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use pupilbench::eval::{synth_eye, BenchReport, DatasetManifest, SynthParams};
use pupilbench::GrayImage;

fn pupilbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pupilbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect()
}

fn write_eye(dir: &Path) -> (PathBuf, f64, f64) {
    let (img, ann) = synth_eye(&SynthParams {
        cx: 300.0,
        cy: 250.0,
        ..SynthParams::default()
    })
    .unwrap();
    let path = dir.join("eye.png");
    fs::write(&path, img.to_png()).unwrap();
    (path, ann.cx, ann.cy)
}

#[test]
fn detect_rst_on_synthetic_eye() {
    let tmp = tempfile::tempdir().unwrap();
    let (eye, cx, cy) = write_eye(tmp.path());
    let out = pupilbench(&["detect", p(&eye), "--method", "rst"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 1);
    let d = &lines[0];
    assert_eq!(d["method"], "RST");
    let (x, y) = (d["cx"].as_f64().unwrap(), d["cy"].as_f64().unwrap());
    assert!((x - cx).hypot(y - cy) <= 4.0, "{d}");
    for key in ["shape", "score", "elapsed_s"] {
        assert!(d.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn detect_missing_file_is_a_usage_error() {
    let out = pupilbench(&["detect", "/nonexistent/eye.png"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn detect_all_on_flat_image_fails_every_method() {
    let tmp = tempfile::tempdir().unwrap();
    let flat = tmp.path().join("flat.png");
    fs::write(&flat, GrayImage::filled(640, 480, 128).to_png()).unwrap();
    let out = pupilbench(&["detect", p(&flat), "--method", "all"]);
    assert_eq!(out.status.code(), Some(2));
    let lines = json_lines(&out);
    let methods: Vec<&str> = lines
        .iter()
        .map(|l| l["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, ["CHT", "EF", "IDO", "RST"]);
    assert!(lines
        .iter()
        .all(|l| l["error"].is_string() && l.get("cx").is_none()));
}

fn without_elapsed(lines: Vec<Value>) -> Vec<Value> {
    lines
        .into_iter()
        .map(|mut l| {
            l.as_object_mut().unwrap().remove("elapsed_s");
            l
        })
        .collect()
}

#[test]
fn overlay_does_not_change_detections() {
    let tmp = tempfile::tempdir().unwrap();
    let (eye, _, _) = write_eye(tmp.path());
    let overlay = tmp.path().join("overlay.png");
    let plain = pupilbench(&["detect", p(&eye)]);
    let drawn = pupilbench(&["detect", p(&eye), "--overlay", p(&overlay)]);
    assert_eq!(plain.status.code(), Some(0));
    assert_eq!(drawn.status.code(), Some(0));
    assert_eq!(
        without_elapsed(json_lines(&plain)),
        without_elapsed(json_lines(&drawn))
    );
    let img = image::open(&overlay).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (640, 480));
    // something was drawn in color
    assert!(img
        .pixels()
        .any(|px| px.0[0] != px.0[1] || px.0[1] != px.0[2]));
}

#[test]
fn parameter_overrides_are_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let (eye, _, _) = write_eye(tmp.path());
    for bad in [
        vec!["--radii", "25..5"],
        vec!["--radii", "0..5"],
        vec!["--alpha", "0"],
        vec!["--threshold", "300"],
        vec!["--method", "sobel"],
    ] {
        let mut args = vec!["detect", p(&eye)];
        args.extend(bad.iter().copied());
        assert_eq!(pupilbench(&args).status.code(), Some(1), "{bad:?}");
    }
    let ok = pupilbench(&[
        "detect",
        p(&eye),
        "--method",
        "ido",
        "--radii",
        "6..14",
        "--threshold",
        "30",
    ]);
    assert_eq!(ok.status.code(), Some(0));
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn synth_is_deterministic_and_apportioned() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = pupilbench(&["synth", "--count", "80", "--seed", "1", "--out", p(dir)]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(tree(&a), tree(&b));
    let manifest = DatasetManifest::load(&a.join("manifest.json")).unwrap();
    let mut counts = BTreeMap::new();
    for e in &manifest.images {
        *counts.entry(e.category.as_str()).or_insert(0) += 1;
        assert!(a.join(&e.path).exists());
        assert!(e.annotation.is_some());
    }
    assert_eq!(
        counts,
        BTreeMap::from([
            ("clear", 47),
            ("eyelid", 9),
            ("glasses_reflections", 10),
            ("hair_eyelashes", 14)
        ])
    );
}

#[test]
fn synth_rejects_bad_requests() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("c");
    assert_eq!(
        pupilbench(&["synth", "--count", "0", "--out", p(&out_dir)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        pupilbench(&[
            "synth",
            "--count",
            "4",
            "--proportions",
            "1,2",
            "--out",
            p(&out_dir)
        ])
        .status
        .code(),
        Some(1)
    );
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    assert_eq!(
        pupilbench(&["synth", "--count", "2", "--out", p(&blocker.join("sub"))])
            .status
            .code(),
        Some(1)
    );
}

fn clear_corpus(dir: &Path) {
    let out = pupilbench(&[
        "synth",
        "--count",
        "8",
        "--seed",
        "7",
        "--proportions",
        "1,0,0,0",
        "--out",
        p(dir),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bench_matches_golden_report() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let reports = tmp.path().join("reports");
    clear_corpus(&corpus);
    let out = pupilbench(&[
        "bench",
        p(&corpus.join("manifest.json")),
        "--out",
        p(&reports),
        "--repeat",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("Global hit rate (%)"));

    let report = BenchReport::from_json(&fs::read(reports.join("report.json")).unwrap()).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/clear8.md");
    assert_eq!(
        report.without_timing().to_markdown(),
        fs::read_to_string(golden).unwrap()
    );
    let md = fs::read_to_string(reports.join("report.md")).unwrap();
    assert!(md.starts_with("# Pupil detection benchmark"));
}

#[test]
fn bench_method_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    clear_corpus(&corpus);
    let reports = tmp.path().join("r");
    let out = pupilbench(&[
        "bench",
        p(&corpus.join("manifest.json")),
        "--out",
        p(&reports),
        "--methods",
        "rst,ef",
        "--repeat",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value =
        serde_json::from_slice(&fs::read(reports.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["methods"], serde_json::json!(["EF", "RST"]));
}

#[test]
fn bench_with_missing_image_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    clear_corpus(&corpus);
    fs::remove_file(corpus.join("eye_0003.png")).unwrap();
    let out = pupilbench(&[
        "bench",
        p(&corpus.join("manifest.json")),
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let missing = pupilbench(&["bench", p(&tmp.path().join("none.json"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = pupilbench(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["detect", "bench", "synth", "annotate-serve"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    assert_eq!(pupilbench(&[]).status.code(), Some(1));
}
