use super::blur::gaussian_blur;
use super::color::velocity_to_color;
use super::palette::IdPalette;
use crate::error::{Error, Result};
use crate::geom::{diff, Dims, Trajectory, TrajectorySet};
use crate::raster::{fill_disc, Video};

/// Speeds at or below this (pixels/frame) count as static.
pub const STATIC_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    SparsePose,
    ObjectId,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::SparsePose => "sparse_pose",
            Modality::ObjectId => "object_id",
        }
    }
}

/// Per-frame RGB conditioning rasters with components in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionStack {
    pub frames: Video,
    pub modality: Modality,
}

/// Optional overrides for sparse-pose drawing; `None` picks the default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsePoseParams {
    pub v_max: Option<f64>,
    pub point_radius: Option<f64>,
    pub sigma: f64,
}

impl Default for SparsePoseParams {
    fn default() -> Self {
        Self {
            v_max: None,
            point_radius: None,
            sigma: 2.0,
        }
    }
}

impl SparsePoseParams {
    /// Resolves `(v_max, point_radius, sigma)` for a trajectory set.
    pub fn resolve(&self, set: &TrajectorySet) -> (f64, f64, f64) {
        (
            self.v_max.unwrap_or_else(|| velocity_percentile(set, 0.99)),
            self.point_radius.unwrap_or_else(|| default_point_radius(set.dims)),
            self.sigma,
        )
    }
}

/// `max(1, round(0.015 * min(W, H)))`.
pub fn default_point_radius(dims: Dims) -> f64 {
    (0.015 * dims.width.min(dims.height) as f64).round().max(1.0)
}

/// Nearest-rank percentile of per-frame speeds over frames where the object is
/// visible at both ends of the step. Falls back to 1.0 when nothing moves.
pub fn velocity_percentile(set: &TrajectorySet, q: f64) -> f64 {
    let mut speeds: Vec<f64> = set
        .iter()
        .flat_map(|t| {
            t.points
                .windows(2)
                .zip(t.visible.windows(2))
                .filter(|(_, v)| v[0] && v[1])
                .map(|(p, _)| (p[1] - p[0]).magnitude())
                .collect::<Vec<_>>()
        })
        .filter(|s| *s > STATIC_EPSILON)
        .collect();
    if speeds.is_empty() {
        return 1.0;
    }
    speeds.sort_by(|a, b| a.total_cmp(b));
    let rank = ((q * speeds.len() as f64).ceil() as usize).clamp(1, speeds.len());
    speeds[rank - 1]
}

fn check_set(set: &TrajectorySet) -> Result<()> {
    for t in set.iter() {
        if t.points.len() != set.frame_count || t.visible.len() != set.frame_count {
            return Err(Error::shape(format!(
                "object {} has {} frames, set has {}",
                t.object_id,
                t.points.len(),
                set.frame_count
            )));
        }
    }
    Ok(())
}

fn draw_order(set: &TrajectorySet) -> Vec<&Trajectory> {
    let mut order: Vec<&Trajectory> = set.iter().collect();
    order.sort_by_key(|t| t.object_id);
    order
}

/// Sparse-pose stack: from frame 1 on, every visible object whose last step
/// exceeds [`STATIC_EPSILON`] becomes a disc colored by its velocity; frame 0
/// stays black. Each frame is then Gaussian-blurred with `sigma`.
pub fn draw_sparse_pose(set: &TrajectorySet, v_max: f64, point_radius: f64, sigma: f64) -> Result<ConditionStack> {
    if set.frame_count < 2 {
        return Err(Error::TrajectoryTooShort(set.frame_count));
    }
    if !(sigma >= 0.0) || !(point_radius >= 0.0) {
        return Err(Error::invalid(format!(
            "sigma {sigma} and point_radius {point_radius} must be non-negative"
        )));
    }
    check_set(set)?;
    let (w, h) = (set.dims.width as usize, set.dims.height as usize);
    let mut video = Video::zeros(set.frame_count, h, w, 3);
    let order = draw_order(set);
    let vels = order.iter().map(|t| diff(t)).collect::<Result<Vec<_>>>()?;
    for i in 1..set.frame_count {
        let frame = video.frame_mut(i);
        for (t, v) in order.iter().zip(&vels) {
            let step = v[i - 1];
            if !t.visible[i] || step.magnitude() <= STATIC_EPSILON {
                continue;
            }
            let color = velocity_to_color(step, v_max)?;
            let p = t.points[i];
            fill_disc(frame, w, h, p.x, p.y, point_radius, color);
        }
        if sigma > 0.0 {
            let blurred = gaussian_blur(frame, w, h, 3, sigma);
            frame.copy_from_slice(&blurred);
        }
    }
    Ok(ConditionStack {
        frames: video,
        modality: Modality::SparsePose,
    })
}

/// Object-ID stack: every visible object drawn in every frame as a disc of its
/// palette color. No blur.
pub fn draw_object_id(set: &TrajectorySet, palette: &IdPalette, point_radius: f64) -> Result<ConditionStack> {
    check_set(set)?;
    let (w, h) = (set.dims.width as usize, set.dims.height as usize);
    let order = draw_order(set);
    let colors = order
        .iter()
        .map(|t| palette.color(t.object_id))
        .collect::<Result<Vec<_>>>()?;
    let mut video = Video::zeros(set.frame_count, h, w, 3);
    for i in 0..set.frame_count {
        let frame = video.frame_mut(i);
        for (t, color) in order.iter().zip(&colors) {
            if t.visible[i] {
                let p = t.points[i];
                fill_disc(frame, w, h, p.x, p.y, point_radius, *color);
            }
        }
    }
    Ok(ConditionStack {
        frames: video,
        modality: Modality::ObjectId,
    })
}
