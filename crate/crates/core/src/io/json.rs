//! Trajectory JSON:
//! `{"width","height","frame_count","objects":[{"id","class","points","visible"}]}`.
//! Scene files add an `events` array and per-object `radius`/`color`; readers
//! that only want trajectories ignore those.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Dims, Point, Trajectory, TrajectorySet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: u32,
    #[serde(default = "default_class")]
    pub class: String,
    pub points: Vec<[f64; 2]>,
    pub visible: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[f64; 3]>,
}

fn default_class() -> String {
    "object".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub frame: usize,
    pub kind: String,
    pub ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDocument {
    pub width: u32,
    pub height: u32,
    pub frame_count: usize,
    pub objects: Vec<ObjectRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<EventRecord>>,
}

impl TrajectoryDocument {
    pub fn from_set(set: &TrajectorySet) -> Self {
        Self {
            width: set.dims.width,
            height: set.dims.height,
            frame_count: set.frame_count,
            objects: set
                .iter()
                .map(|t| ObjectRecord {
                    id: t.object_id,
                    class: t.class.clone(),
                    points: t.points.iter().map(|p| [p.x, p.y]).collect(),
                    visible: t.visible.clone(),
                    radius: None,
                    color: None,
                })
                .collect(),
            events: None,
        }
    }

    pub fn to_set(&self) -> Result<TrajectorySet> {
        let mut trajectories = Vec::with_capacity(self.objects.len());
        for o in &self.objects {
            if o.points.len() != self.frame_count || o.visible.len() != self.frame_count {
                return Err(Error::Format(format!(
                    "object {}: {} points and {} visibility flags for frame_count {}",
                    o.id,
                    o.points.len(),
                    o.visible.len(),
                    self.frame_count
                )));
            }
            let points = o.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
            trajectories
                .push(Trajectory::with_visibility(o.id, points, o.visible.clone())?.with_class(o.class.clone()));
        }
        TrajectorySet::new(trajectories, self.frame_count, Dims::new(self.width, self.height))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

pub fn read_trajectories(path: &Path) -> Result<TrajectorySet> {
    TrajectoryDocument::read(path)?.to_set()
}

pub fn write_trajectories(path: &Path, set: &TrajectorySet) -> Result<()> {
    TrajectoryDocument::from_set(set).write(path)
}
