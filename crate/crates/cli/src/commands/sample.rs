use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use trajdiff_core::cond::assign_palette;
use trajdiff_core::eval::{extract_filled, trajectories_to_detections};
use trajdiff_core::io::{write_detections, write_ppm_stack};
use trajdiff_core::Video;
use trajdiff_dit::train::stack_cond;
use trajdiff_dit::{cond_latents, load_checkpoint, sample, NoiseSchedule};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::scenes::load_scene;
use crate::staging::Staged;

pub const DETECTIONS_NAME: &str = "detections.csv";

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Conditioning trajectories; required unless the model is unconditioned.
    #[arg(long)]
    pub traj: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Palette size for extraction when no trajectory file is given.
    #[arg(long, default_value_t = 2)]
    pub objects: usize,
    /// Receives `frame_NNNNN.ppm`, `detections.csv` and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Samples one video. Also writes the color-keyed tracks of the sample as
/// detections, one per object and frame; objects never seen sit at the
/// frame center.
pub fn execute(args: &SampleArgs) -> Result<Video> {
    let start = Instant::now();
    let (cfg, params) = load_checkpoint(&args.ckpt)?;
    let set = args.traj.as_deref().map(load_scene).transpose()?.map(|(s, _)| s);
    let cond = match (&set, cfg.cond.uses_pose()) {
        (_, false) => None,
        (None, true) => {
            return Err(CliError::usage(format!("a {} model needs --traj", cfg.cond)));
        }
        (Some(set), true) => {
            let c = cond_latents::<f32>(set, &cfg)?.expect("conditioned model");
            Some(stack_cond(&[&c])?)
        }
    };
    let sched = NoiseSchedule::linear(cfg.steps)?;
    let video = sample(&params, &cfg, &sched, cond.as_ref(), &[args.seed])?
        .pop()
        .expect("one seed, one video");

    let objects = set.as_ref().map_or(args.objects, |s| s.len()).max(1);
    let tracks = extract_filled(&video.to_bytes(), &assign_palette(objects)?)?;
    let out = Staged::dir(&args.out_dir)?;
    write_ppm_stack(out.path(), "frame", &video.to_bytes())?;
    write_detections(&out.path().join(DETECTIONS_NAME), &trajectories_to_detections(&tracks))?;
    let dir = out.commit()?;

    let mut params_map = BTreeMap::new();
    params_map.insert("seed".to_string(), args.seed.to_string());
    params_map.insert("objects".to_string(), objects.to_string());
    let mut inputs = vec![args.ckpt.clone()];
    inputs.extend(args.traj.clone());
    let mut m = RunManifest::new("sample", params_map);
    m.duration_s = start.elapsed().as_secs_f64();
    m.write(&dir, &inputs, std::slice::from_ref(&dir))?;
    Ok(video)
}
