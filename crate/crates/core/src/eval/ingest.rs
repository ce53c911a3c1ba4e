use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Dims, Point, Trajectory, TrajectorySet};

/// One detected object center in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame: i64,
    pub object_id: u32,
    pub x: f64,
    pub y: f64,
}

/// Groups detections into one trajectory per object id (ascending). Frames
/// without a record are invisible; for duplicate `(object_id, frame)` pairs the
/// first record wins.
pub fn ingest_detections(records: &[DetectionRecord], frame_count: usize, dims: Dims) -> Result<TrajectorySet> {
    let mut by_id: BTreeMap<u32, (Vec<Point>, Vec<bool>)> = BTreeMap::new();
    for (index, r) in records.iter().enumerate() {
        if r.frame < 0 || r.frame as u64 >= frame_count as u64 {
            return Err(Error::FrameOutOfRange {
                index,
                object_id: r.object_id,
                frame: r.frame,
                frame_count,
            });
        }
        if !r.x.is_finite() || !r.y.is_finite() {
            return Err(Error::invalid(format!(
                "detection record #{index} has non-finite coordinates"
            )));
        }
        let (points, visible) = by_id
            .entry(r.object_id)
            .or_insert_with(|| (vec![Point::default(); frame_count], vec![false; frame_count]));
        let f = r.frame as usize;
        if !visible[f] {
            points[f] = Point::new(r.x, r.y);
            visible[f] = true;
        }
    }
    let trajectories = by_id
        .into_iter()
        .map(|(id, (points, visible))| Trajectory::with_visibility(id, points, visible))
        .collect::<Result<Vec<_>>>()?;
    TrajectorySet::new(trajectories, frame_count, dims)
}

/// Completes every trajectory across all frames: a missing frame takes the most
/// recent detected position, and frames before the first detection take the
/// first detected position. The result is fully visible.
pub fn fill_gaps(set: &TrajectorySet) -> Result<TrajectorySet> {
    let mut out = set.clone();
    for t in &mut out.trajectories {
        let first = t
            .visible
            .iter()
            .position(|&v| v)
            .ok_or(Error::UndetectableObject(t.object_id))?;
        let mut last = t.points[first];
        for (p, v) in t.points.iter_mut().zip(t.visible.iter_mut()) {
            if *v {
                last = *p;
            } else {
                *p = last;
                *v = true;
            }
        }
    }
    Ok(out)
}
