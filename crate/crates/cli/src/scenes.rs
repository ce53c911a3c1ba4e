//! Scene generation from settings and scene-file loading.

use std::fs;
use std::path::{Path, PathBuf};

use trajdiff_core::io::TrajectoryDocument;
use trajdiff_core::sim::{
    near_crossing_pool, scene_parts_from_document, simulate, ObjectMeta, Scenario, Scene, SceneConfig,
};
use trajdiff_core::{Dims, TrajectorySet};

use crate::error::{PathContext, Result};
use crate::manifest::MANIFEST_NAME;
use crate::settings::Settings;

/// Scenario names accepted on the command line; `crossing` is a two-ball
/// pool scene whose paths cross near the table center.
pub const SCENARIOS: &[&str] = &["pool", "domino", "movi2d", "crossing"];

pub const SCENE_KEYS: &[&str] = &[
    "scenario",
    "objects",
    "frames",
    "width",
    "height",
    "seed",
    "substeps",
    "restitution",
    "friction",
    "body_radius",
    "max_speed",
    "pocket_radius",
];

pub const DEFAULT_SIZE: u32 = 64;
pub const DEFAULT_FRAMES: usize = 32;
pub const DEFAULT_OBJECTS: usize = 4;
/// Disc radius for scene files that do not record one.
pub const DEFAULT_RADIUS: f64 = 2.0;

/// Simulates one scene from settings, with `seed` overriding the settings' seed.
pub fn scene_from_settings(s: &Settings, seed: u64) -> Result<Scene> {
    let dims = Dims::new(s.get("width", DEFAULT_SIZE)?, s.get("height", DEFAULT_SIZE)?);
    let frames = s.get("frames", DEFAULT_FRAMES)?;
    let scenario = s.get_str("scenario", "pool");
    if scenario == "crossing" {
        return Ok(near_crossing_pool(dims, frames, seed)?);
    }
    let kind: Scenario = scenario.parse()?;
    let mut cfg = SceneConfig::new(kind, dims, frames, s.get("objects", DEFAULT_OBJECTS)?, seed);
    cfg.substeps = s.get("substeps", cfg.substeps)?;
    cfg.restitution = s.get("restitution", cfg.restitution)?;
    cfg.friction = s.get("friction", cfg.friction)?;
    cfg.body_radius = s.get("body_radius", cfg.body_radius)?;
    cfg.max_speed = s.get("max_speed", cfg.max_speed)?;
    cfg.pocket_radius = s.get("pocket_radius", cfg.pocket_radius)?;
    Ok(simulate(&cfg)?)
}

/// Trajectories and object metadata of a scene or trajectory file.
pub fn load_scene(path: &Path) -> Result<(TrajectorySet, Vec<ObjectMeta>)> {
    let text = fs::read_to_string(path).at(path)?;
    let doc = TrajectoryDocument::from_json(&text)?;
    let (set, _, objects) = scene_parts_from_document(&doc, DEFAULT_RADIUS)?;
    Ok((set, objects))
}

/// `*.json` files of a directory in name order, manifests excluded.
pub fn scene_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .at(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .at(dir)?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != MANIFEST_NAME));
    files.sort();
    Ok(files)
}
