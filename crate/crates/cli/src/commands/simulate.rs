use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use trajdiff_core::io::write_ppm_stack;
use trajdiff_core::sim::render_scene;

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::scenes::{scene_from_settings, SCENARIOS, SCENE_KEYS};
use crate::settings::Settings;
use crate::staging::Staged;

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Flat `key = value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// pool, domino, movi2d or crossing.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra `key=value` settings.
    #[arg(long = "set")]
    pub sets: Vec<String>,
    /// Scene JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for `frame_NNNNN.ppm` renders; the manifest goes here too.
    #[arg(long)]
    pub render_dir: Option<PathBuf>,
}

pub fn execute(args: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let s = Settings::load(
        args.config.as_deref(),
        &args.sets,
        &[
            ("scenario", args.scenario.clone()),
            ("objects", args.objects.map(|v| v.to_string())),
            ("frames", args.frames.map(|v| v.to_string())),
            ("width", args.width.map(|v| v.to_string())),
            ("height", args.height.map(|v| v.to_string())),
            ("seed", args.seed.map(|v| v.to_string())),
        ],
    )?;
    s.check_keys(SCENE_KEYS)?;
    let scenario = s.get_str("scenario", "pool");
    if !SCENARIOS.contains(&scenario.as_str()) {
        return Err(CliError::usage(format!(
            "unknown scenario {scenario:?} (expected one of {})",
            SCENARIOS.join(", ")
        )));
    }
    let scene = scene_from_settings(&s, s.get("seed", 0)?)?;

    let out = Staged::file(&args.out)?;
    scene.write_json(out.path())?;
    let frames = match &args.render_dir {
        Some(dir) => {
            let staged = Staged::dir(dir)?;
            let video = render_scene(&scene, scene.trajectories.dims);
            write_ppm_stack(staged.path(), "frame", &video)?;
            Some(staged)
        }
        None => None,
    };
    let scene_path = out.commit()?;
    let mut outputs = vec![scene_path.clone()];
    let manifest_dir = match frames {
        Some(staged) => {
            let dir = staged.commit()?;
            outputs.push(dir.clone());
            dir
        }
        None => scene_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), PathBuf::from),
    };
    let mut m = RunManifest::new("simulate", s.values.clone());
    m.duration_s = start.elapsed().as_secs_f64();
    m.write(&manifest_dir, &[], &outputs)?;
    Ok(())
}
