use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use trajdiff_core::eval::{fill_gaps, ingest_detections, mtem_score};
use trajdiff_core::io::read_detections;
use trajdiff_core::{Dims, TrajectorySet};

use crate::error::{CliError, PathContext, Result};
use crate::manifest::RunManifest;
use crate::scenes::load_scene;
use crate::staging::Staged;

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Ground-truth scene or trajectory JSON.
    #[arg(long)]
    pub gt: PathBuf,
    /// Detection CSV (`frame,object_id,x,y`).
    #[arg(long)]
    pub gen: PathBuf,
    /// Frame size as WxH.
    #[arg(long)]
    pub dims: String,
    #[arg(long)]
    pub frames: usize,
    /// Report output; the manifest goes in its directory.
    #[arg(long)]
    pub json: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub raw_total: f64,
    pub normalized_percent: f64,
    /// Matched `(ground-truth id, generated id)` pairs.
    pub pairs: Vec<[u32; 2]>,
    /// Trajectories left unmatched on the larger side.
    pub unmatched: usize,
    pub pair_distances: Vec<f64>,
}

pub fn parse_dims(text: &str) -> Result<Dims> {
    let bad = || CliError::usage(format!("--dims expects WxH, got {text:?}"));
    let (w, h) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h): (u32, u32) = (
        w.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    );
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok(Dims::new(w, h))
}

/// Ground truth as scored: objects that are never visible are dropped and
/// gaps are filled with the last seen position.
pub fn scored_ground_truth(set: &TrajectorySet) -> Result<TrajectorySet> {
    let mut kept = set.clone();
    kept.trajectories.retain(|t| t.visible.iter().any(|&v| v));
    Ok(fill_gaps(&kept)?)
}

pub fn evaluate_sets(gt: &TrajectorySet, gen: &TrajectorySet) -> Result<EvaluationReport> {
    let gt = scored_ground_truth(gt)?;
    let gen = fill_gaps(gen)?;
    if gt.is_empty() || gen.is_empty() {
        return Err(CliError::domain(format!(
            "nothing to match: {} ground-truth and {} generated trajectories",
            gt.len(),
            gen.len()
        )));
    }
    let score = mtem_score(&gt, &gen)?;
    Ok(EvaluationReport {
        raw_total: score.raw_total,
        normalized_percent: score.normalized_percent,
        pairs: score
            .pairs
            .pairs
            .iter()
            .map(|&(i, j)| [gt.trajectories[i].object_id, gen.trajectories[j].object_id])
            .collect(),
        unmatched: score.pairs.unmatched.len(),
        pair_distances: score.pair_distances,
    })
}

pub fn evaluate_files(gt: &Path, gen: &Path, dims: Dims, frames: usize) -> Result<EvaluationReport> {
    let (gt_set, _) = load_scene(gt)?;
    if gt_set.dims != dims || gt_set.frame_count != frames {
        return Err(CliError::domain(format!(
            "ground truth is {}x{} with {} frames, expected {}x{} with {frames}",
            gt_set.dims.width, gt_set.dims.height, gt_set.frame_count, dims.width, dims.height
        )));
    }
    let records = read_detections(gen)?;
    let gen_set = ingest_detections(&records, frames, dims)?;
    evaluate_sets(&gt_set, &gen_set)
}

pub fn execute(args: &EvaluateArgs) -> Result<EvaluationReport> {
    let start = Instant::now();
    let dims = parse_dims(&args.dims)?;
    let report = evaluate_files(&args.gt, &args.gen, dims, args.frames)?;
    let text = serde_json::to_string_pretty(&report)?;
    let out = Staged::file(&args.json)?;
    fs::write(out.path(), &text).at(out.path())?;
    let json = out.commit()?;

    let params: BTreeMap<String, String> = [
        ("dims".to_string(), format!("{}x{}", dims.width, dims.height)),
        ("frames".to_string(), args.frames.to_string()),
    ]
    .into_iter()
    .collect();
    let dir = json
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), PathBuf::from);
    let mut m = RunManifest::new("evaluate", params);
    m.duration_s = start.elapsed().as_secs_f64();
    m.write(&dir, &[args.gt.clone(), args.gen.clone()], &[json])?;
    Ok(report)
}
