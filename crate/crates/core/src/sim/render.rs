use super::{ObjectMeta, Scene};
use crate::geom::{Dims, TrajectorySet};
use crate::raster::{fill_disc, ByteVideo};

/// Draws every visible body as a hard-edged disc in its color on black.
/// Higher object ids are drawn last. Positions and radii are scaled when
/// `resolution` differs from the scene's frame size.
pub fn render_scene(scene: &Scene, resolution: Dims) -> ByteVideo {
    render_objects(&scene.trajectories, &scene.objects, resolution)
}

/// [`render_scene`] from trajectories and object metadata; trajectories
/// without metadata are skipped.
pub fn render_objects(set: &TrajectorySet, objects: &[ObjectMeta], resolution: Dims) -> ByteVideo {
    let (w, h) = (resolution.width as usize, resolution.height as usize);
    let sx = resolution.width as f64 / set.dims.width as f64;
    let sy = resolution.height as f64 / set.dims.height as f64;
    let mut video = ByteVideo::black(set.frame_count, h, w);
    let mut order: Vec<_> = set
        .iter()
        .filter_map(|t| objects.iter().find(|o| o.object_id == t.object_id).map(|o| (t, o)))
        .collect();
    order.sort_by_key(|(t, _)| t.object_id);
    for f in 0..set.frame_count {
        let frame = video.frame_mut(f);
        for (t, meta) in &order {
            if !t.visible[f] {
                continue;
            }
            let color = meta.color.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8);
            let p = t.points[f];
            fill_disc(frame, w, h, p.x * sx, p.y * sy, meta.radius * sx.min(sy), color);
        }
    }
    video
}
