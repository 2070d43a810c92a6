use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn vosmerge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vosmerge"))
        .args(args)
        .env_remove("VOSMERGE_JOBS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = vosmerge(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Exit code and parsed stderr error object.
fn fails(args: &[&str]) -> (i32, Value) {
    let out = vosmerge(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    (out.status.code().unwrap(), err["error"].clone())
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

struct Corpus {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Corpus {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        ok(&[
            "synth",
            "--out",
            &s(&root.join("c")),
            "--preset",
            "crossing",
        ]);
        Self { _tmp: tmp, root }
    }

    fn p(&self, rel: &str) -> String {
        s(&self.root.join(rel))
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert!(vosmerge(&["--help"]).status.success());
    assert!(vosmerge(&["--version"]).status.success());
    assert!(vosmerge(&["merge", "--help"]).status.success());
}

#[test]
fn usage_errors_exit_two_with_json() {
    let c = Corpus::new();
    let (code, err) = fails(&["frobnicate"]);
    assert_eq!((code, err["kind"].as_str()), (2, Some("usage")));

    let (code, err) = fails(&["merge", "--input", &c.p("nope"), "--out", &c.p("m")]);
    assert_eq!(code, 2);
    assert!(err["message"].as_str().unwrap().contains("does not exist"));
    assert!(
        !c.root.join("m").exists(),
        "outputs created before validation"
    );

    let (code, _) = fails(&[
        "merge",
        "--input",
        &c.p("c/videos"),
        "--out",
        &c.p("m"),
        "--weights",
        "0.5,0.5",
    ]);
    assert_eq!(code, 2);
    let (code, _) = fails(&[
        "merge",
        "--input",
        &c.p("c/videos"),
        "--out",
        &c.p("m"),
        "--components",
        "obj,colour",
    ]);
    assert_eq!(code, 2);
    let (code, _) = fails(&[
        "filter",
        "--input",
        &c.p("c/videos"),
        "--out",
        &c.p("f"),
        "--nms-iou",
        "1.5",
    ]);
    assert_eq!(code, 2);
    let (code, _) = fails(&[
        "search",
        "--input",
        &c.p("c/videos"),
        "--gt",
        &c.p("c/gt"),
        "--out",
        &c.p("s.json"),
        "--samples",
        "3",
        "--top-k",
        "4",
    ]);
    assert_eq!(code, 2);
    let (code, _) = fails(&[
        "eval",
        "--pred",
        &c.p("missing"),
        "--gt",
        &c.p("c/gt"),
        "--out",
        &c.p("e.json"),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn broken_manifest_is_reported_with_its_field() {
    let c = Corpus::new();
    let path = c.root.join("c/videos/crossing/manifest.json");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    doc["embedding_dim"] = Value::from(3);
    fs::write(&path, doc.to_string()).unwrap();
    let (code, err) = fails(&["filter", "--input", &s(&path), "--out", &c.p("f")]);
    assert_eq!(code, 2);
    let msg = err["message"].as_str().unwrap();
    assert!(msg.contains("ground_truth[0].embedding"), "{msg}");
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let c = Corpus::new();
    fs::write(c.root.join("blocker"), b"x").unwrap();
    let (code, err) = fails(&[
        "filter",
        "--input",
        &c.p("c/videos"),
        "--out",
        &c.p("blocker/out"),
    ]);
    assert_eq!(code, 1);
    assert_eq!(err["kind"], "io");
}

#[test]
fn full_toolchain() {
    let c = Corpus::new();
    ok(&["filter", "-i", &c.p("c/videos"), "-o", &c.p("f")]);
    assert!(c.root.join("f/crossing/manifest.json").is_file());
    assert!(c.root.join("f/crossing/flow/00001.flo").is_file());

    ok(&[
        "search",
        "-i",
        &c.p("f"),
        "--gt",
        &c.p("c/gt"),
        "-o",
        &c.p("s.json"),
        "--samples",
        "40",
        "--top-k",
        "3",
        "--seed",
        "4",
    ]);
    let result: Value =
        serde_json::from_str(&fs::read_to_string(c.root.join("s.json")).unwrap()).unwrap();
    assert_eq!(result["top_k"].as_array().unwrap().len(), 3);
    assert_eq!(result["trace"].as_array().unwrap().len(), 40);

    for (dir, extra) in [
        ("m0", vec!["--weights-file", "s.json"]),
        ("m1", vec!["--weights-file", "s.json", "--rank", "1"]),
        ("m2", vec!["--weights", "equal", "--components", "maskprop"]),
    ] {
        let mut args = vec![
            "merge".to_string(),
            "-i".into(),
            c.p("f"),
            "-o".into(),
            c.p(dir),
        ];
        args.extend(extra.iter().map(|a| {
            if a.ends_with(".json") {
                c.p(a)
            } else {
                a.to_string()
            }
        }));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&args);
        assert!(c.root.join(dir).join("crossing/00013.pgm").is_file());
        assert!(c.root.join(dir).join("crossing/selections.json").is_file());
    }
    let (code, _) = fails(&[
        "merge",
        "-i",
        &c.p("f"),
        "-o",
        &c.p("m9"),
        "--weights-file",
        &c.p("s.json"),
        "--rank",
        "40",
    ]);
    assert_eq!(code, 2);

    ok(&[
        "oracle",
        "-i",
        &c.p("f"),
        "--gt",
        &c.p("c/gt"),
        "-o",
        &c.p("o"),
    ]);
    ok(&[
        "eval",
        "--pred",
        &c.p("o"),
        "--gt",
        &c.p("c/gt"),
        "-o",
        &c.p("eo.json"),
    ]);
    let eo: Value =
        serde_json::from_str(&fs::read_to_string(c.root.join("eo.json")).unwrap()).unwrap();
    assert_eq!(eo["aggregate"]["jf_mean"], 1.0);

    ok(&[
        "ensemble",
        "--inputs",
        &c.p("m0"),
        &c.p("m1"),
        &c.p("m2"),
        "-o",
        &c.p("e"),
    ]);
    ok(&[
        "eval",
        "--pred",
        &c.p("e"),
        "--gt",
        &c.p("c/gt"),
        "-o",
        &c.p("ee.json"),
        "--csv",
        &c.p("ee.csv"),
        "--exclude-last",
        "--tolerance",
        "2",
    ]);
    let csv = fs::read_to_string(c.root.join("ee.csv")).unwrap();
    assert!(csv.starts_with("video_id,object_id,jf_mean"));
    assert!(csv.lines().last().unwrap().starts_with("ALL,"));

    // voting over copies of one result reproduces it
    ok(&[
        "ensemble",
        "--inputs",
        &c.p("m2"),
        &c.p("m2"),
        "-o",
        &c.p("same"),
    ]);
    for t in 0..14 {
        let name = format!("crossing/{t:05}.pgm");
        assert_eq!(
            fs::read(c.root.join("same").join(&name)).unwrap(),
            fs::read(c.root.join("m2").join(&name)).unwrap()
        );
    }
}

#[test]
fn jobs_env_var_is_honoured() {
    let c = Corpus::new();
    let out = Command::new(env!("CARGO_BIN_EXE_vosmerge"))
        .args(["filter", "-i", &c.p("c/videos"), "-o", &c.p("f")])
        .env("VOSMERGE_JOBS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_vosmerge"))
        .args(["filter", "-i", &c.p("c/videos"), "-o", &c.p("f")])
        .env("VOSMERGE_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn synth_presets_and_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    ok(&[
        "synth",
        "--out",
        &s(&root.join("r")),
        "--preset",
        "random",
        "--count",
        "3",
        "--seed",
        "40",
    ]);
    for id in ["rand000040", "rand000041", "rand000042"] {
        assert!(root
            .join("r/videos")
            .join(id)
            .join("manifest.json")
            .is_file());
        assert!(root.join("r/gt").join(id).join("00000.pgm").is_file());
    }
    ok(&[
        "synth",
        "--out",
        &s(&root.join("s")),
        "--preset",
        "single",
        "--count",
        "2",
    ]);
    assert!(root.join("s/videos/single000/manifest.json").is_file());
    assert!(root.join("s/videos/single001/manifest.json").is_file());
    let (code, _) = fails(&["synth", "--out", &s(&root.join("z")), "--count", "0"]);
    assert_eq!(code, 2);
}
