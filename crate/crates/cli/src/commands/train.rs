use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use trajdiff_dit::{objects_example, save_checkpoint, DitConfig, Example, Trainer};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::scenes::{load_scene, scene_files};
use crate::settings::Settings;
use crate::staging::Staged;

/// Progress is reported on standard error every this many steps.
pub const LOG_EVERY: usize = 50;

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Directory of scene JSON files.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Flat `key = value` model config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_steps: Option<usize>,
    /// none, sparse or sparse_id.
    #[arg(long)]
    pub cond: Option<String>,
    /// Extra `key=value` config entries.
    #[arg(long = "set")]
    pub sets: Vec<String>,
    /// Checkpoint output; the manifest goes in its directory.
    #[arg(long)]
    pub ckpt: PathBuf,
}

/// Model config from settings; frame count and size default to the data's.
pub fn resolve_config(s: &Settings, data_frames: usize, data_w: u32, data_h: u32) -> Result<DitConfig> {
    s.check_keys(DitConfig::keys())?;
    let mut cfg = DitConfig {
        frames: data_frames,
        width: data_w as usize,
        height: data_h as usize,
        ..DitConfig::default()
    };
    cfg.apply(&s.values)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_examples(files: &[PathBuf], cfg: &DitConfig) -> Result<Vec<Example<f32>>> {
    files
        .iter()
        .map(|f| {
            let (set, objects) = load_scene(f)?;
            objects_example(&set, &objects, cfg).map_err(|e| CliError::domain(format!("{}: {e}", f.display())))
        })
        .collect()
}

fn manifest_dir(ckpt: &Path) -> PathBuf {
    ckpt.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), PathBuf::from)
}

pub fn execute(args: &TrainArgs) -> Result<()> {
    let start = Instant::now();
    let s = Settings::load(
        args.config.as_deref(),
        &args.sets,
        &[
            ("seed", args.seed.map(|v| v.to_string())),
            ("train_steps", args.train_steps.map(|v| v.to_string())),
            ("cond", args.cond.clone()),
        ],
    )?;
    let files = scene_files(&args.data_dir)?;
    let Some(first) = files.first() else {
        return Err(CliError::domain(format!(
            "no scene files in {}",
            args.data_dir.display()
        )));
    };
    let (set, _) = load_scene(first)?;
    let cfg = resolve_config(&s, set.frame_count, set.dims.width, set.dims.height)?;
    let data = load_examples(&files, &cfg)?;

    let mut trainer = Trainer::<f32>::new(&cfg)?;
    trainer.fit(&data, cfg.train_steps, |step, loss| {
        if step % LOG_EVERY == 0 || step == cfg.train_steps {
            eprintln!("step {step}/{}: loss {loss:.5}", cfg.train_steps);
        }
    })?;

    let out = Staged::file(&args.ckpt)?;
    save_checkpoint(out.path(), &cfg, &trainer.params)?;
    let ckpt = out.commit()?;
    let params = DitConfig::keys()
        .iter()
        .map(|k| (k.to_string(), cfg.get(k).unwrap_or_default()))
        .collect();
    let mut m = RunManifest::new("train", params);
    m.duration_s = start.elapsed().as_secs_f64();
    m.write(&manifest_dir(&ckpt), &files, std::slice::from_ref(&ckpt))?;
    Ok(())
}
