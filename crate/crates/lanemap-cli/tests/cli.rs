//! CLI behavior: exit codes, atomic outputs, determinism and the config
//! round trip.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_lanemap")
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lanemap-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn synth_scene(dir: &Path, seed: u64) {
    let (code, _, err) = run(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
    ]);
    assert_eq!(code, 0, "synth failed: {err}");
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, _) = run(&["no-such-subcommand"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["map", "--bogus-flag"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn unreadable_input_exits_two_without_partial_output() {
    let dir = work_dir("badinput");
    let out = dir.join("never.osm");
    let (code, _, err) = run(&[
        "map",
        "--mask",
        dir.join("missing.png").to_str().unwrap(),
        "--georef",
        dir.join("missing.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {err}");
    assert!(!out.exists(), "partial output left behind");

    // A corrupt mask file is an input error too.
    let bad = dir.join("corrupt.png");
    std::fs::write(&bad, b"this is not a png").unwrap();
    let scene = dir.join("scene");
    synth_scene(&scene, 1);
    let (code, _, _) = run(&[
        "map",
        "--mask",
        bad.to_str().unwrap(),
        "--georef",
        scene.join("georef.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(!out.exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn synth_and_map_are_byte_deterministic() {
    let dir = work_dir("determinism");
    let (a, b) = (dir.join("a"), dir.join("b"));
    synth_scene(&a, 5);
    synth_scene(&b, 5);
    for file in ["mask.png", "georef.txt", "truth.osm", "scene.txt"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        let fb = std::fs::read(b.join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical synth runs");
    }

    for out in ["first.osm", "second.osm"] {
        let (code, _, err) = run(&[
            "map",
            "--mask",
            a.join("mask.png").to_str().unwrap(),
            "--georef",
            a.join("georef.txt").to_str().unwrap(),
            "--out",
            dir.join(out).to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "map failed: {err}");
    }
    let first = std::fs::read(dir.join("first.osm")).unwrap();
    let second = std::fs::read(dir.join("second.osm")).unwrap();
    assert_eq!(first, second, "map output differs across identical runs");
    assert!(dir.join("first.summary.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn eval_self_is_perfect_and_disjoint_is_zero() {
    let dir = work_dir("evalcases");
    let scene = dir.join("scene");
    synth_scene(&scene, 2);
    let truth = scene.join("truth.osm");
    let (code, stdout, _) = run(&[
        "eval",
        "--generated",
        truth.to_str().unwrap(),
        "--reference",
        truth.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["precision"], 1.0);
    assert_eq!(json["recall"], 1.0);

    // A different layout on the same tile anchor scores far below perfect.
    let other = dir.join("other");
    let spec = dir.join("wide.txt");
    std::fs::write(&spec, "lanes = 3\nrotation_deg = 9\n").unwrap();
    let (code, _, err) = run(&[
        "synth",
        "--scene",
        spec.to_str().unwrap(),
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "synth failed: {err}");
    let (code, stdout, _) = run(&[
        "eval",
        "--generated",
        truth.to_str().unwrap(),
        "--reference",
        other.join("truth.osm").to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(json["precision"].as_f64().unwrap() < 0.5);

    let (code, _, _) = run(&[
        "eval",
        "--generated",
        dir.join("nope.osm").to_str().unwrap(),
        "--reference",
        truth.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn print_config_round_trips() {
    let dir = work_dir("config");
    let (code, stdout, _) = run(&["print-config"]);
    assert_eq!(code, 0);
    let path = dir.join("config.txt");
    std::fs::write(&path, &stdout).unwrap();
    let (code, reprinted, _) = run(&["print-config", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout, reprinted, "config round trip changed the output");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn overlay_renders_a_png() {
    let dir = work_dir("overlay");
    let scene = dir.join("scene");
    synth_scene(&scene, 4);
    let gen = dir.join("gen.osm");
    let (code, _, err) = run(&[
        "map",
        "--mask",
        scene.join("mask.png").to_str().unwrap(),
        "--georef",
        scene.join("georef.txt").to_str().unwrap(),
        "--out",
        gen.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "map failed: {err}");
    let out = dir.join("overlay.png");
    let (code, _, err) = run(&[
        "overlay",
        "--mask",
        scene.join("mask.png").to_str().unwrap(),
        "--georef",
        scene.join("georef.txt").to_str().unwrap(),
        "--map",
        gen.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "overlay failed: {err}");
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn synth_ground_truth_scores_perfectly_against_itself() {
    let dir = work_dir("selfscore");
    for kind in ["straight", "curve", "intersection", "roundabout"] {
        let spec = dir.join(format!("{kind}.txt"));
        std::fs::write(&spec, format!("kind = {kind}\n")).unwrap();
        let scene = dir.join(kind);
        let (code, _, err) = run(&[
            "synth",
            "--scene",
            spec.to_str().unwrap(),
            "--out",
            scene.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "synth {kind} failed: {err}");
        let truth = scene.join("truth.osm");
        let (code, stdout, _) = run(&[
            "eval",
            "--generated",
            truth.to_str().unwrap(),
            "--reference",
            truth.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(json["precision"], 1.0, "{kind}");
        assert_eq!(json["recall"], 1.0, "{kind}");
    }
    std::fs::remove_dir_all(&dir).ok();
}
