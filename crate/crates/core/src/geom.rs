//! Frame-aligned 2D trajectories.
//!
//! Coordinates are continuous pixels with the origin at the top-left corner,
//! x growing rightward and y downward. Pixel `(px, py)` has its center at the
//! integer coordinate `(px, py)`. Frame indices run `0..frame_count`.

use std::collections::HashSet;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl Add<Velocity> for Point {
    type Output = Point;

    fn add(self, v: Velocity) -> Point {
        Point::new(self.x + v.dx, self.y + v.dy)
    }
}

impl Sub for Point {
    type Output = Velocity;

    fn sub(self, other: Point) -> Velocity {
        Velocity::new(self.x - other.x, self.y - other.y)
    }
}

/// Per-frame motion in pixels/frame. Also used for cumulative displacements.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub dx: f64,
    pub dy: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn magnitude(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

impl Add for Velocity {
    type Output = Velocity;

    fn add(self, o: Velocity) -> Velocity {
        Velocity::new(self.dx + o.dx, self.dy + o.dy)
    }
}

/// Frame dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub width: u32,
    pub height: u32,
}

impl Dims {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }
}

/// One object's position and visibility in every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub object_id: u32,
    pub class: String,
    pub points: Vec<Point>,
    pub visible: Vec<bool>,
}

impl Trajectory {
    /// A fully visible trajectory.
    pub fn new(object_id: u32, points: Vec<Point>) -> Self {
        let visible = vec![true; points.len()];
        Self {
            object_id,
            class: "object".to_string(),
            points,
            visible,
        }
    }

    pub fn with_visibility(object_id: u32, points: Vec<Point>, visible: Vec<bool>) -> Result<Self> {
        if points.len() != visible.len() {
            return Err(Error::shape(format!(
                "object {object_id}: {} points but {} visibility flags",
                points.len(),
                visible.len()
            )));
        }
        Ok(Self {
            object_id,
            class: "object".to_string(),
            points,
            visible,
        })
    }

    pub fn with_class(mut self, class: impl Into<String>) -> Self {
        self.class = class.into();
        self
    }

    pub fn with_id(mut self, object_id: u32) -> Self {
        self.object_id = object_id;
        self
    }

    pub fn frame_count(&self) -> usize {
        self.points.len()
    }

    /// Adds a constant offset to every point.
    pub fn translated(&self, offset: Velocity) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            *p = *p + offset;
        }
        out
    }
}

/// Trajectories that share a frame count and frame dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub trajectories: Vec<Trajectory>,
    pub frame_count: usize,
    pub dims: Dims,
}

impl TrajectorySet {
    pub fn empty(frame_count: usize, dims: Dims) -> Self {
        Self {
            trajectories: Vec::new(),
            frame_count,
            dims,
        }
    }

    /// Validates shared frame count, unique ids and finite coordinates.
    pub fn new(trajectories: Vec<Trajectory>, frame_count: usize, dims: Dims) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &trajectories {
            if t.points.len() != frame_count || t.visible.len() != frame_count {
                return Err(Error::shape(format!(
                    "object {} has {} points / {} flags, expected {frame_count}",
                    t.object_id,
                    t.points.len(),
                    t.visible.len()
                )));
            }
            if !seen.insert(t.object_id) {
                return Err(Error::invalid(format!("duplicate object id {}", t.object_id)));
            }
            if let Some(p) = t.points.iter().find(|p| !p.is_finite()) {
                return Err(Error::invalid(format!(
                    "object {} has non-finite point {p:?}",
                    t.object_id
                )));
            }
        }
        Ok(Self {
            trajectories,
            frame_count,
            dims,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, object_id: u32) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.object_id == object_id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trajectory> {
        self.trajectories.iter()
    }
}

/// Samples `frames` points at equal arc-length spacing along `polyline`,
/// including both endpoints.
pub fn resample_polyline(polyline: &[Point], frames: usize) -> Result<Trajectory> {
    if polyline.is_empty() {
        return Err(Error::EmptyPolyline);
    }
    if frames == 0 {
        return Err(Error::ZeroFrames);
    }
    if let Some(p) = polyline.iter().find(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("non-finite polyline vertex {p:?}")));
    }

    let mut cumulative = Vec::with_capacity(polyline.len());
    cumulative.push(0.0);
    for w in polyline.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + w[0].distance(w[1]));
    }
    let total = *cumulative.last().unwrap();

    if frames == 1 || total == 0.0 {
        return Ok(Trajectory::new(0, vec![polyline[0]; frames]));
    }

    let mut points = Vec::with_capacity(frames);
    let mut seg = 0;
    for j in 0..frames {
        if j == frames - 1 {
            points.push(*polyline.last().unwrap());
            break;
        }
        let s = total * j as f64 / (frames - 1) as f64;
        while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < s {
            seg += 1;
        }
        let (a, b) = (polyline[seg], polyline[seg + 1]);
        let len = cumulative[seg + 1] - cumulative[seg];
        let u = if len > 0.0 { (s - cumulative[seg]) / len } else { 0.0 };
        points.push(Point::new(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)));
    }
    Ok(Trajectory::new(0, points))
}

/// Adjacent-frame differences, `out[i] = p[i+1] - p[i]`.
pub fn diff(traj: &Trajectory) -> Result<Vec<Velocity>> {
    if traj.points.len() < 2 {
        return Err(Error::TrajectoryTooShort(traj.points.len()));
    }
    Ok(traj.points.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Prefix sum of velocities starting from zero: displacement from frame 0.
pub fn cumulative_flow(vels: &[Velocity]) -> Vec<Velocity> {
    let mut out = Vec::with_capacity(vels.len() + 1);
    let mut acc = Velocity::ZERO;
    out.push(acc);
    for v in vels {
        acc = acc + *v;
        out.push(acc);
    }
    out
}

/// Clamps every point into `[0, W-1] x [0, H-1]`. Visibility is untouched.
pub fn clamp_to_frame(traj: &Trajectory, dims: Dims) -> Trajectory {
    let max_x = (dims.width.max(1) - 1) as f64;
    let max_y = (dims.height.max(1) - 1) as f64;
    let mut out = traj.clone();
    for p in &mut out.points {
        p.x = p.x.clamp(0.0, max_x);
        p.y = p.y.clamp(0.0, max_y);
    }
    out
}
