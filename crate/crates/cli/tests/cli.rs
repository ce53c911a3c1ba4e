use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use trajdiff_cli::manifest::{collect_files, RunManifest, MANIFEST_NAME};
use trajdiff_core::eval::trajectories_to_detections;
use trajdiff_core::io::{write_detections, TrajectoryDocument};

fn trajdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajdiff"))
        .args(args)
        .env("INTRAGEN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY: &[&str] = &[
    "--set",
    "frames=4",
    "--set",
    "width=16",
    "--set",
    "height=16",
    "--set",
    "dim=8",
    "--set",
    "blocks=1",
    "--set",
    "heads=2",
    "--set",
    "steps=5",
    "--set",
    "train_steps=3",
    "--set",
    "train_scenes=3",
    "--set",
    "objects=2",
];

fn pipeline(out: &Path, seed: &str, extra: &[&str]) -> Output {
    let mut args = vec!["pipeline", "--seed", seed, "--out-dir", s(out)];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    trajdiff(&args)
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = trajdiff(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = trajdiff(&["simulate", "--out", "x.json", "--colour", "red"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_setting_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = trajdiff(&["simulate", "--out", s(&dir.path().join("a.json")), "--set", "gravity=9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("a.json").exists());
}

#[test]
fn domain_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = trajdiff(&["encode", "--traj", s(&missing), "--out-dir", s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn self_evaluation_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.json");
    let out = trajdiff(&[
        "simulate",
        "--scenario",
        "pool",
        "--objects",
        "3",
        "--seed",
        "4",
        "--out",
        s(&scene),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let set = TrajectoryDocument::read(&scene).unwrap().to_set().unwrap();
    let csv = dir.path().join("s_as_detections.csv");
    write_detections(&csv, &trajectories_to_detections(&set)).unwrap();
    let json = dir.path().join("eval").join("r.json");
    let dims = format!("{}x{}", set.dims.width, set.dims.height);
    let frames = set.frame_count.to_string();
    let out = trajdiff(&[
        "evaluate",
        "--gt",
        s(&scene),
        "--gen",
        s(&csv),
        "--dims",
        &dims,
        "--frames",
        &frames,
        "--json",
        s(&json),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["normalized_percent"].as_f64(), Some(0.0));
    assert_eq!(report["raw_total"].as_f64(), Some(0.0));
    assert_eq!(report["pairs"].as_array().unwrap().len(), 3);
    assert!(json.exists() && dir.path().join("eval").join(MANIFEST_NAME).exists());
}

#[test]
fn simulate_writes_frames_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    let frames = dir.path().join("frames");
    let out = trajdiff(&[
        "simulate",
        "--scenario",
        "domino",
        "--objects",
        "4",
        "--frames",
        "6",
        "--seed",
        "2",
        "--out",
        s(&scene),
        "--render-dir",
        s(&frames),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&scene).unwrap();
    assert!(text.contains("\"events\""));
    let ppm = fs::read(frames.join("frame_00005.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6"));
    let m = RunManifest::read(&frames.join(MANIFEST_NAME)).unwrap();
    assert_eq!(m.subcommand, "simulate");
    assert_eq!(m.params["scenario"], "domino");
}

/// Every file under `dir`, keyed by relative path; manifests lose their duration.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<PathBuf> = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let bytes = if p.file_name().unwrap() == MANIFEST_NAME {
                let mut m = RunManifest::read(&p).unwrap();
                m.duration_s = 0.0;
                serde_json::to_vec(&m).unwrap()
            } else {
                fs::read(&p).unwrap()
            };
            (p.strip_prefix(dir).unwrap().to_path_buf(), bytes)
        })
        .collect()
}

#[test]
fn pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = pipeline(&a, "7", &[]);
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    let rb = Command::new(env!("CARGO_BIN_EXE_trajdiff"))
        .args(["pipeline", "--seed", "7", "--out-dir", s(&b)])
        .args(TINY)
        .env("INTRAGEN_THREADS", "1")
        .output()
        .unwrap();
    assert!(rb.status.success());
    assert_eq!(ra.stdout, rb.stdout);
    assert_eq!(
        fs::read(a.join("summary.json")).unwrap(),
        fs::read(b.join("summary.json")).unwrap()
    );
    assert_eq!(snapshot(&a), snapshot(&b));
    let summary: serde_json::Value = serde_json::from_slice(&ra.stdout).unwrap();
    for key in ["mtem_percent", "mtem_raw", "psnr_db", "ssim", "pairs", "unmatched"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary.as_object().unwrap().len(), 6);
}

#[test]
fn pipeline_seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(pipeline(&a, "1", &[]).status.success());
    assert!(pipeline(&b, "2", &[]).status.success());
    assert_ne!(
        fs::read(a.join("heldout").join("scene.json")).unwrap(),
        fs::read(b.join("heldout").join("scene.json")).unwrap()
    );
}

#[test]
fn every_output_directory_has_one_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(pipeline(&out, "5", &[]).status.success());
    let mut dirs = vec![out.clone()];
    for e in fs::read_dir(&out).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            dirs.push(p);
        }
    }
    assert_eq!(dirs.len(), 7);
    for d in dirs {
        assert!(d.join(MANIFEST_NAME).is_file(), "{} lacks a manifest", d.display());
    }
    let out = trajdiff(&["verify", s(&out)]);
    assert!(out.status.success());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e2e.cfg");
    fs::write(&cfg, "# toy run\nframes = 4\nwidth = 16\nheight = 16\ndim = 8\nblocks = 1\nheads = 2\nsteps = 5\ntrain_steps = 3\ntrain_scenes = 2\nobjects = 3\nseed = 1\n").unwrap();
    let out_dir = dir.path().join("run");
    let out = trajdiff(&[
        "pipeline",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--set",
        "objects=2",
        "--out-dir",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = RunManifest::read(&out_dir.join(MANIFEST_NAME)).unwrap();
    assert_eq!(m.params["seed"], "9");
    assert_eq!(m.params["objects"], "2");
    assert_eq!(m.params["dim"], "8");
    assert_eq!(m.inputs.len(), 1);
}

#[test]
fn failure_leaves_only_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = pipeline(&out, "3", &["--set", "scenario=pool", "--set", "objects=400"]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());
    assert!(dir.path().join("run.partial").is_dir());
}

#[test]
fn train_then_sample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    fs::create_dir(&scenes).unwrap();
    for seed in ["1", "2"] {
        let out = trajdiff(&[
            "simulate",
            "--scenario",
            "crossing",
            "--frames",
            "4",
            "--width",
            "16",
            "--height",
            "16",
            "--seed",
            seed,
            "--out",
            s(&scenes.join(format!("s{seed}.json"))),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let cfg = dir.path().join("train.cfg");
    fs::write(
        &cfg,
        "dim = 8\nblocks = 1\nheads = 2\nsteps = 5\ntrain_steps = 2\ncond = sparse_id\n",
    )
    .unwrap();
    let ckpt = dir.path().join("model").join("out.bin");
    let out = trajdiff(&[
        "train",
        "--data-dir",
        s(&scenes),
        "--config",
        s(&cfg),
        "--ckpt",
        s(&ckpt),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(&fs::read(&ckpt).unwrap()[..4], b"ITGN");

    let no_traj = trajdiff(&["sample", "--ckpt", s(&ckpt), "--out-dir", s(&dir.path().join("x"))]);
    assert_eq!(no_traj.status.code(), Some(2));

    let samples = dir.path().join("samples");
    let traj = scenes.join("s1.json");
    let out = trajdiff(&[
        "sample",
        "--ckpt",
        s(&ckpt),
        "--traj",
        s(&traj),
        "--seed",
        "3",
        "--out-dir",
        s(&samples),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(samples.join("frame_00003.ppm").is_file());
    let csv = fs::read_to_string(samples.join("detections.csv")).unwrap();
    assert!(csv.starts_with("frame,object_id,x,y"));
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
}

#[test]
fn encode_writes_requested_stacks() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.json");
    assert!(
        trajdiff(&["simulate", "--frames", "5", "--seed", "8", "--out", s(&scene)])
            .status
            .success()
    );
    let cond = dir.path().join("cond");
    let out = trajdiff(&["encode", "--traj", s(&scene), "--modality", "id", "--out-dir", s(&cond)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = collect_files(&cond)
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 5);
    assert!(names.iter().all(|n| n.starts_with("id_")));
    let m = RunManifest::read(&cond.join(MANIFEST_NAME)).unwrap();
    assert_eq!(m.params["modality"], "id");
    assert_eq!(m.params["sigma"].parse::<f64>().unwrap(), 2.0);
}

fn simulated_outputs() -> (tempfile::TempDir, Vec<PathBuf>) {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    let frames = dir.path().join("frames");
    let code = trajdiff_cli::run([
        "trajdiff",
        "simulate",
        "--frames",
        "3",
        "--width",
        "16",
        "--height",
        "16",
        "--seed",
        "1",
        "--out",
        s(&scene),
        "--render-dir",
        s(&frames),
    ]);
    assert_eq!(code, 0);
    let files = collect_files(dir.path()).unwrap();
    (dir, files)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verify_detects_any_single_byte_change(pick in any::<prop::sample::Index>(), at in any::<prop::sample::Index>(), flip in 1u8..=255) {
        let (dir, files) = simulated_outputs();
        prop_assert_eq!(trajdiff_cli::run(["trajdiff", "verify", s(dir.path())]), 0);
        let target = pick.get(&files);
        let mut bytes = fs::read(target).unwrap();
        let i = at.index(bytes.len());
        bytes[i] ^= flip;
        fs::write(target, &bytes).unwrap();
        prop_assert_eq!(trajdiff_cli::run(["trajdiff", "verify", s(dir.path())]), 1);
    }
}
