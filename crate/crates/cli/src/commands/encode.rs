use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use trajdiff_core::cond::{
    assign_palette, default_point_radius, draw_object_id, draw_sparse_pose, velocity_percentile, MAX_PALETTE,
};
use trajdiff_core::io::write_ppm_stack;

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::scenes::load_scene;
use crate::staging::Staged;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Modality {
    Sparse,
    Id,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    /// Scene or trajectory JSON.
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub modality: Modality,
    /// Gaussian blur of the sparse-pose stack, in pixels.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Speed at full saturation; defaults to the 99th-percentile speed.
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Sparse-pose disc radius; defaults to max(1, round(0.015 min(W, H))).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Object-id disc radius; defaults to the sparse-pose radius.
    #[arg(long)]
    pub id_radius: Option<f64>,
    /// Receives `pose_NNNNN.ppm`, `id_NNNNN.ppm` and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn execute(args: &EncodeArgs) -> Result<()> {
    let start = Instant::now();
    let (set, _) = load_scene(&args.traj)?;
    if set.is_empty() {
        return Err(CliError::domain("trajectory file has no objects"));
    }
    let v_max = args.v_max.unwrap_or_else(|| velocity_percentile(&set, 0.99));
    let radius = args.radius.unwrap_or_else(|| default_point_radius(set.dims));
    let id_radius = args.id_radius.unwrap_or(radius);

    let out = Staged::dir(&args.out_dir)?;
    if matches!(args.modality, Modality::Sparse | Modality::Both) {
        let stack = draw_sparse_pose(&set, v_max, radius, args.sigma)?;
        write_ppm_stack(out.path(), "pose", &stack.frames.to_bytes())?;
    }
    if matches!(args.modality, Modality::Id | Modality::Both) {
        let n = set.iter().map(|t| t.object_id as usize + 1).max().unwrap_or(1);
        if n > MAX_PALETTE {
            return Err(CliError::domain(format!(
                "object id {} exceeds the {MAX_PALETTE}-color palette",
                n - 1
            )));
        }
        let stack = draw_object_id(&set, &assign_palette(n)?, id_radius)?;
        write_ppm_stack(out.path(), "id", &stack.frames.to_bytes())?;
    }
    let dir = out.commit()?;

    let modality = match args.modality {
        Modality::Sparse => "sparse",
        Modality::Id => "id",
        Modality::Both => "both",
    };
    let params: BTreeMap<String, String> = [
        ("modality", modality.to_string()),
        ("sigma", format!("{:?}", args.sigma)),
        ("v_max", format!("{v_max:?}")),
        ("radius", format!("{radius:?}")),
        ("id_radius", format!("{id_radius:?}")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let mut m = RunManifest::new("encode", params);
    m.duration_s = start.elapsed().as_secs_f64();
    m.write(&dir, std::slice::from_ref(&args.traj), std::slice::from_ref(&dir))?;
    Ok(())
}
