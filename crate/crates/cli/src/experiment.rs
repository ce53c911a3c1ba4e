//! Toy-scale conditioning ablation: one model per condition mode, trained on
//! two-object near-crossing pool scenes and scored on held-out scenes.

use std::time::Instant;

use serde::Serialize;
use trajdiff_core::cond::assign_palette;
use trajdiff_core::eval::extract_filled;
use trajdiff_core::seed::derive_seed;
use trajdiff_core::sim::{near_crossing_pool, Scene};
use trajdiff_core::{Dims, Video};
use trajdiff_dit::train::stack_cond;
use trajdiff_dit::{cond_latents, sample, scene_example, ConditionMode, DitConfig, Example, Trainer};

use crate::commands::evaluate::evaluate_sets;
use crate::error::{CliError, Result};
use crate::threads::{parallel_map, worker_count};

pub const MODES: [ConditionMode; 3] = [
    ConditionMode::None,
    ConditionMode::SparsePose,
    ConditionMode::SparsePoseAndId,
];

#[derive(Debug, Clone)]
pub struct TrendConfig {
    /// Model settings shared by all three modes; `cond` is overridden.
    pub model: DitConfig,
    pub train_scenes: usize,
    /// Held-out scenes per seed group.
    pub heldout: usize,
    pub groups: usize,
    pub seed: u64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self {
            model: DitConfig {
                frames: 8,
                height: 32,
                width: 32,
                dim: 32,
                blocks: 2,
                heads: 2,
                steps: 50,
                learning_rate: 3e-3,
                batch_size: 4,
                train_steps: 1000,
                pose_v_max: 2.0,
                pose_radius: 1.0,
                pose_sigma: 1.0,
                id_radius: 2.0,
                ..DitConfig::default()
            },
            train_scenes: 200,
            heldout: 8,
            groups: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeResult {
    pub mode: String,
    pub train_seconds: f64,
    /// Mean loss over the last 50 steps (or all of them, if fewer).
    pub final_loss: f64,
    /// Median held-out MTEM percent per seed group.
    pub group_medians: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub modes: Vec<ModeResult>,
    /// Per group: median MTEM of the sparse+id samples against their own
    /// trajectories and against another scene's trajectories.
    pub control: Vec<[f64; 2]>,
    /// Groups where uncond > sparse >= sparse+id.
    pub ordered_groups: usize,
    /// Groups where the true trajectories score better than the shuffled ones.
    pub control_wins: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn scenes(cfg: &TrendConfig, label: &str, count: usize) -> Result<Vec<Scene>> {
    let dims = Dims::new(cfg.model.width as u32, cfg.model.height as u32);
    (0..count)
        .map(|i| {
            Ok(near_crossing_pool(
                dims,
                cfg.model.frames,
                derive_seed(cfg.seed, label, i as u64),
            )?)
        })
        .collect()
}

/// MTEM percent of each sampled scene against `heldout[(i + shift) % n]`.
fn score(videos: &[Video], heldout: &[Scene], shift: usize) -> Result<Vec<f64>> {
    let n = heldout.len();
    videos
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let gt = &heldout[(i + shift) % n].trajectories;
            let gen = extract_filled(&v.to_bytes(), &assign_palette(gt.len())?)?;
            Ok(evaluate_sets(gt, &gen)?.normalized_percent)
        })
        .collect()
}

struct Trained {
    mode: ConditionMode,
    trainer: Trainer<f32>,
    seconds: f64,
    final_loss: f64,
}

fn train_mode(cfg: &TrendConfig, mode: ConditionMode, train: &[Scene]) -> Result<Trained> {
    let model = DitConfig {
        cond: mode,
        ..cfg.model.clone()
    };
    let data = train
        .iter()
        .map(|s| scene_example(s, &model))
        .collect::<trajdiff_dit::Result<Vec<Example<f32>>>>()?;
    let mut trainer = Trainer::<f32>::new(&model)?;
    let start = Instant::now();
    let losses = trainer.fit(&data, model.train_steps, |_, _| {})?;
    let tail = &losses[losses.len().saturating_sub(50)..];
    let final_loss = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    Ok(Trained {
        mode,
        trainer,
        seconds: start.elapsed().as_secs_f64(),
        final_loss,
    })
}

/// Trains the three models (in parallel when threads allow), then samples
/// every seed group with each of them.
pub fn run_trend(cfg: &TrendConfig) -> Result<TrendReport> {
    if cfg.train_scenes == 0 || cfg.heldout < 2 || cfg.groups == 0 {
        return Err(CliError::usage(
            "trend needs training scenes, two held-out scenes and a group",
        ));
    }
    let train = scenes(cfg, "trend/train", cfg.train_scenes)?;
    let heldout = scenes(cfg, "trend/heldout", cfg.heldout * cfg.groups)?;
    let trained = parallel_map(MODES.len(), worker_count(), |m| train_mode(cfg, MODES[m], &train))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut modes = Vec::new();
    let mut control = Vec::new();
    for t in &trained {
        let model = &t.trainer.cfg;
        let mut medians = Vec::new();
        for g in 0..cfg.groups {
            let group = &heldout[g * cfg.heldout..(g + 1) * cfg.heldout];
            let conds = group
                .iter()
                .map(|s| cond_latents::<f32>(&s.trajectories, model))
                .collect::<trajdiff_dit::Result<Vec<_>>>()?;
            let refs: Vec<_> = conds.iter().flatten().collect();
            let stacked = if refs.is_empty() {
                None
            } else {
                Some(stack_cond(&refs)?)
            };
            let seeds: Vec<u64> = (0..cfg.heldout)
                .map(|i| derive_seed(cfg.seed, "trend/sample", (g * cfg.heldout + i) as u64))
                .collect();
            let videos = sample(&t.trainer.params, model, &t.trainer.sched, stacked.as_ref(), &seeds)?;
            let own = median(&score(&videos, group, 0)?);
            medians.push(own);
            if t.mode == ConditionMode::SparsePoseAndId {
                control.push([own, median(&score(&videos, group, 1)?)]);
            }
        }
        modes.push(ModeResult {
            mode: t.mode.to_string(),
            train_seconds: t.seconds,
            final_loss: t.final_loss,
            group_medians: medians,
        });
    }
    let ordered_groups = (0..cfg.groups)
        .filter(|&g| {
            let m = |i: usize| modes[i].group_medians[g];
            m(0) > m(1) && m(1) >= m(2)
        })
        .count();
    let control_wins = control.iter().filter(|c| c[0] < c[1]).count();
    Ok(TrendReport {
        modes,
        control,
        ordered_groups,
        control_wins,
    })
}
