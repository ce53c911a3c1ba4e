use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use trajdiff_core::eval::{psnr, psnr_capped, ssim};
use trajdiff_core::seed::derive_seed;
use trajdiff_core::sim::render_objects;
use trajdiff_dit::DitConfig;

use super::encode::{self, EncodeArgs, Modality};
use super::evaluate::{self, EvaluateArgs};
use super::sample::{self, SampleArgs, DETECTIONS_NAME};
use super::simulate::{self, SimulateArgs};
use super::train::{self, TrainArgs};
use crate::error::{CliError, PathContext, Result};
use crate::manifest::RunManifest;
use crate::scenes::{load_scene, scene_from_settings, SCENE_KEYS};
use crate::settings::Settings;
use crate::staging::Staged;
use crate::threads::{parallel_map, worker_count};

pub const SUMMARY_NAME: &str = "summary.json";
/// Training scenes simulated when `train_scenes` is not set.
pub const DEFAULT_TRAIN_SCENES: usize = 32;
const PIPELINE_KEYS: &[&str] = &["train_scenes"];

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Flat `key = value` settings: scene keys, model keys and `train_scenes`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra `key=value` settings.
    #[arg(long = "set")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Final numbers of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mtem_percent: f64,
    pub mtem_raw: f64,
    /// Sample vs ground-truth render, capped at 100 dB.
    pub psnr_db: f64,
    pub ssim: f64,
    pub pairs: usize,
    pub unmatched: usize,
}

fn as_sets(map: &BTreeMap<String, String>) -> Vec<String> {
    map.iter().map(|(k, v)| format!("{k}={v}")).collect()
}

fn write_training_scenes(dir: &Path, scene_settings: &Settings, root_seed: u64, count: usize) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let scenes = parallel_map(count, worker_count(), |i| {
        scene_from_settings(scene_settings, derive_seed(root_seed, "pipeline/train", i as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let out = Staged::dir(dir)?;
    for (i, scene) in scenes.iter().enumerate() {
        scene.write_json(&out.path().join(format!("scene_{i:05}.json")))?;
    }
    let dir = out.commit()?;
    let mut params = scene_settings.values.clone();
    params.insert("train_scenes".to_string(), count.to_string());
    let mut m = RunManifest::new("simulate", params);
    m.duration_s = start.elapsed().as_secs_f64();
    m.write(&dir, &[], std::slice::from_ref(&dir))?;
    Ok(scenes
        .iter()
        .enumerate()
        .map(|(i, _)| dir.join(format!("scene_{i:05}.json")))
        .collect())
}

/// simulate -> encode -> train -> sample -> evaluate under one output
/// directory, every stage with its own manifest.
pub fn execute(args: &PipelineArgs) -> Result<Summary> {
    let start = Instant::now();
    let s = Settings::load(
        args.config.as_deref(),
        &args.sets,
        &[("seed", args.seed.map(|v| v.to_string()))],
    )?;
    let allowed: Vec<&str> = SCENE_KEYS
        .iter()
        .chain(DitConfig::keys())
        .chain(PIPELINE_KEYS)
        .copied()
        .collect();
    s.check_keys(&allowed)?;
    let root_seed: u64 = s.get("seed", 0)?;
    let defaults = DitConfig::default();

    let mut scene_settings = Settings {
        values: s.subset(SCENE_KEYS),
    };
    for (k, v) in [
        ("scenario", "crossing".to_string()),
        ("frames", defaults.frames.to_string()),
        ("width", defaults.width.to_string()),
        ("height", defaults.height.to_string()),
    ] {
        scene_settings.values.entry(k.to_string()).or_insert(v);
    }
    scene_settings.values.remove("seed");
    let mut model_settings = s.subset(DitConfig::keys());
    for k in ["frames", "width", "height"] {
        model_settings.insert(k.to_string(), scene_settings.values[k].clone());
    }
    model_settings.insert("seed".to_string(), root_seed.to_string());
    let cfg = train::resolve_config(
        &Settings {
            values: model_settings.clone(),
        },
        0,
        0,
        0,
    )?;
    let count: usize = s.get("train_scenes", DEFAULT_TRAIN_SCENES)?;
    if count == 0 {
        return Err(CliError::usage("train_scenes must be positive"));
    }

    let out = Staged::dir(&args.out_dir)?;
    let root = out.path().to_path_buf();
    write_training_scenes(&root.join("scenes"), &scene_settings, root_seed, count)?;

    let heldout = root.join("heldout").join("scene.json");
    simulate::execute(&SimulateArgs {
        config: None,
        scenario: None,
        objects: None,
        frames: None,
        width: None,
        height: None,
        seed: Some(derive_seed(root_seed, "pipeline/heldout", 0)),
        sets: as_sets(&scene_settings.values),
        out: heldout.clone(),
        render_dir: None,
    })?;
    let positive = |v: f64| (v > 0.0).then_some(v);
    encode::execute(&EncodeArgs {
        traj: heldout.clone(),
        modality: Modality::Both,
        sigma: cfg.pose_sigma,
        v_max: positive(cfg.pose_v_max),
        radius: positive(cfg.pose_radius),
        id_radius: positive(cfg.id_radius),
        out_dir: root.join("cond"),
    })?;
    let ckpt = root.join("model").join("model.ckpt");
    train::execute(&TrainArgs {
        data_dir: root.join("scenes"),
        config: None,
        seed: None,
        train_steps: None,
        cond: None,
        sets: as_sets(&model_settings),
        ckpt: ckpt.clone(),
    })?;
    let (gt_set, gt_objects) = load_scene(&heldout)?;
    let video = sample::execute(&SampleArgs {
        ckpt,
        traj: Some(heldout.clone()),
        seed: derive_seed(root_seed, "pipeline/sample", 0),
        objects: gt_set.len(),
        out_dir: root.join("samples"),
    })?;
    let report = evaluate::execute(&EvaluateArgs {
        gt: heldout,
        gen: root.join("samples").join(DETECTIONS_NAME),
        dims: format!("{}x{}", cfg.width, cfg.height),
        frames: cfg.frames,
        json: root.join("eval").join("report.json"),
    })?;

    let truth = render_objects(&gt_set, &gt_objects, gt_set.dims).to_video();
    let summary = Summary {
        mtem_percent: report.normalized_percent,
        mtem_raw: report.raw_total,
        psnr_db: psnr_capped(psnr(&video, &truth)?),
        ssim: ssim(&video, &truth)?,
        pairs: report.pairs.len(),
        unmatched: report.unmatched,
    };
    let summary_path = root.join(SUMMARY_NAME);
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?).at(&summary_path)?;
    let dir = out.commit()?;

    let mut m = RunManifest::new("pipeline", s.values.clone());
    m.duration_s = start.elapsed().as_secs_f64();
    let inputs: Vec<PathBuf> = args.config.iter().cloned().collect();
    m.write(&dir, &inputs, &[dir.join(SUMMARY_NAME)])?;
    Ok(summary)
}
