use trajdiff_core::cond::{
    assign_palette, default_point_radius, draw_object_id, draw_sparse_pose, velocity_percentile,
};
use trajdiff_core::sim::{render_objects, ObjectMeta, Scene};
use trajdiff_core::{Dims, TrajectorySet};

use crate::config::DitConfig;
use crate::error::{Error, Result};
use crate::model::CondLatents;
use crate::sample::unit_to_latent;
use crate::tensor::{Scalar, Tensor};
use crate::train::Example;
use crate::vae::vae_stub_encode;

fn check_dims(cfg: &DitConfig, frames: usize, dims: Dims) -> Result<()> {
    if frames != cfg.frames || dims.width as usize != cfg.width || dims.height as usize != cfg.height {
        return Err(Error::Config(format!(
            "scene is {frames} frames at {}x{}, model expects {} frames at {}x{}",
            dims.width, dims.height, cfg.frames, cfg.width, cfg.height
        )));
    }
    Ok(())
}

/// Pooled condition latents for a trajectory set, in `[0, 1]`. The ID stack
/// is built only when the model uses it.
pub fn cond_latents<T: Scalar>(set: &TrajectorySet, cfg: &DitConfig) -> Result<Option<CondLatents<T>>> {
    if !cfg.cond.uses_pose() {
        return Ok(None);
    }
    check_dims(cfg, set.frame_count, set.dims)?;
    let v_max = match cfg.pose_v_max {
        v if v > 0.0 => v,
        _ => velocity_percentile(set, 0.99),
    };
    let radius = match cfg.pose_radius {
        r if r > 0.0 => r,
        _ => default_point_radius(set.dims),
    };
    let pose = draw_sparse_pose(set, v_max, radius, cfg.pose_sigma)?;
    let pose = vae_stub_encode(&pose.frames, cfg.pool)?;
    let id = if cfg.cond.uses_id() {
        let palette = assign_palette(set.len().max(1))?;
        let id_radius = if cfg.id_radius > 0.0 { cfg.id_radius } else { radius };
        let stack = draw_object_id(&reindexed(set), &palette, id_radius)?;
        Some(vae_stub_encode(&stack.frames, cfg.pool)?)
    } else {
        None
    };
    Ok(Some(CondLatents { pose, id }))
}

// palette slots follow position in the set, so ids need not be 0..n
fn reindexed(set: &TrajectorySet) -> TrajectorySet {
    let mut out = set.clone();
    for (k, t) in out.trajectories.iter_mut().enumerate() {
        t.object_id = k as u32;
    }
    out
}

/// Rendered objects as a `[-1, 1]` latent.
pub fn objects_latent<T: Scalar>(set: &TrajectorySet, objects: &[ObjectMeta], cfg: &DitConfig) -> Result<Tensor<T>> {
    check_dims(cfg, set.frame_count, set.dims)?;
    let video = render_objects(set, objects, set.dims).to_video();
    Ok(unit_to_latent(&vae_stub_encode::<T>(&video, cfg.pool)?))
}

/// Rendered scene as a `[-1, 1]` latent.
pub fn scene_latent<T: Scalar>(scene: &Scene, cfg: &DitConfig) -> Result<Tensor<T>> {
    objects_latent(&scene.trajectories, &scene.objects, cfg)
}

/// Training example for trajectories and object metadata under `cfg.cond`.
pub fn objects_example<T: Scalar>(set: &TrajectorySet, objects: &[ObjectMeta], cfg: &DitConfig) -> Result<Example<T>> {
    Ok(Example {
        latent: objects_latent(set, objects, cfg)?,
        cond: cond_latents(set, cfg)?,
    })
}

/// Training example for a scene under `cfg.cond`.
pub fn scene_example<T: Scalar>(scene: &Scene, cfg: &DitConfig) -> Result<Example<T>> {
    objects_example(&scene.trajectories, &scene.objects, cfg)
}
