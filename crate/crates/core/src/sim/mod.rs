//! Seeded top-down 2D interaction scenes: a pool table, domino chains, and
//! free-flying discs that can come to rest or leave the frame.
//!
//! Velocities are in pixels/frame. Every frame is integrated in
//! `substeps` fixed steps; collisions are resolved with impulses.

mod crossing;
mod discs;
mod domino;
mod render;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::cond::{assign_palette, Rgb};
use crate::error::{Error, Result};
use crate::geom::{Dims, Point, TrajectorySet, Velocity};
use crate::io::{EventRecord, TrajectoryDocument};

pub use crossing::near_crossing_pool;
pub use discs::{simulate_bodies, CollisionRecord, SimOutput};
pub use domino::{contact_delay, simulate_domino};
pub use render::{render_objects, render_scene};

/// Speed (pixels/frame) under which a decelerating body is put to rest.
pub const REST_EPSILON: f64 = 1e-2;
/// Placement attempts per body before giving up.
pub const PLACEMENT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Pool,
    Domino,
    Movi2d,
}

impl Scenario {
    pub fn max_objects(&self) -> usize {
        match self {
            Scenario::Pool => 16,
            Scenario::Domino => 20,
            Scenario::Movi2d => 10,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Pool => "pool",
            Scenario::Domino => "domino",
            Scenario::Movi2d => "movi2d",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pool" => Ok(Scenario::Pool),
            "domino" => Ok(Scenario::Domino),
            "movi2d" => Ok(Scenario::Movi2d),
            other => Err(Error::invalid(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub dims: Dims,
    pub frame_count: usize,
    pub substeps: u32,
    pub restitution: f64,
    /// Fraction of velocity removed per substep.
    pub friction: f64,
    pub scenario: Scenario,
    pub objects: usize,
    pub seed: u64,
    /// Disc radius for pool and movi2d bodies.
    pub body_radius: f64,
    /// Upper bound on initial speeds, pixels/frame.
    pub max_speed: f64,
    /// Pool pocket radius; 0 disables pockets.
    pub pocket_radius: f64,
    pub domino: DominoParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominoParams {
    /// Distance between consecutive domino bases along the path.
    pub spacing: f64,
    pub thickness: f64,
    /// Length of a domino, i.e. how far its top edge travels when it lies flat.
    pub height: f64,
    /// Frames a free domino takes to fall flat.
    pub topple_frames: usize,
    /// Frame at which the first domino is pushed; `None` leaves the chain standing.
    pub trigger_frame: Option<usize>,
    /// Maximum heading change between consecutive dominoes, radians.
    pub max_turn: f64,
}

impl SceneConfig {
    pub fn new(scenario: Scenario, dims: Dims, frame_count: usize, objects: usize, seed: u64) -> Self {
        let side = dims.width.min(dims.height) as f64;
        let spacing = (0.8 * side / objects.max(2) as f64).min(0.12 * side).max(1.0);
        Self {
            dims,
            frame_count,
            substeps: 8,
            restitution: 0.95,
            friction: 0.005,
            scenario,
            objects,
            seed,
            body_radius: (0.06 * side).max(2.0),
            max_speed: (0.05 * side).max(0.5),
            pocket_radius: 2.0 * (0.06 * side).max(2.0),
            domino: DominoParams {
                spacing,
                thickness: 0.25 * spacing,
                height: spacing / 0.6,
                topple_frames: 6,
                trigger_frame: Some(0),
                max_turn: 0.25,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::invalid("substeps must be at least 1"));
        }
        if self.frame_count == 0 {
            return Err(Error::ZeroFrames);
        }
        if self.dims.width == 0 || self.dims.height == 0 {
            return Err(Error::invalid("frame dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(Error::invalid(format!(
                "restitution {} outside [0, 1]",
                self.restitution
            )));
        }
        if !(0.0..1.0).contains(&self.friction) {
            return Err(Error::invalid(format!("friction {} outside [0, 1)", self.friction)));
        }
        if self.objects == 0 || self.objects > self.scenario.max_objects() {
            return Err(Error::invalid(format!(
                "{} objects outside 1..={} for {}",
                self.objects,
                self.scenario.max_objects(),
                self.scenario
            )));
        }
        if !(self.body_radius > 0.0) || !(self.max_speed >= 0.0) || !(self.pocket_radius >= 0.0) {
            return Err(Error::invalid("radius, speed and pocket radius must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyState {
    Moving,
    Resting,
    Captured,
    Exited,
}

impl BodyState {
    pub fn is_gone(&self) -> bool {
        matches!(self, BodyState::Captured | BodyState::Exited)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub object_id: u32,
    pub position: Point,
    pub velocity: Velocity,
    pub radius: f64,
    pub mass: f64,
    pub state: BodyState,
    pub color: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Collision,
    Pocket,
    Topple,
    Exit,
    Rest,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Collision => "collision",
            EventKind::Pocket => "pocket",
            EventKind::Topple => "topple",
            EventKind::Exit => "exit",
            EventKind::Rest => "rest",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "collision" => EventKind::Collision,
            "pocket" => EventKind::Pocket,
            "topple" => EventKind::Topple,
            "exit" => EventKind::Exit,
            "rest" => EventKind::Rest,
            other => return Err(Error::Format(format!("unknown event kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub frame: usize,
    pub kind: EventKind,
    pub ids: Vec<u32>,
}

/// Per-object metadata carried alongside the trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMeta {
    pub object_id: u32,
    pub class: String,
    pub radius: f64,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    pub trajectories: TrajectorySet,
    pub events: Vec<Event>,
    pub objects: Vec<ObjectMeta>,
}

impl Scene {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn to_document(&self) -> TrajectoryDocument {
        let mut doc = TrajectoryDocument::from_set(&self.trajectories);
        for (rec, meta) in doc.objects.iter_mut().zip(&self.objects) {
            rec.radius = Some(meta.radius);
            rec.color = Some(meta.color);
        }
        doc.events = Some(
            self.events
                .iter()
                .map(|e| EventRecord {
                    frame: e.frame,
                    kind: e.kind.as_str().to_string(),
                    ids: e.ids.clone(),
                })
                .collect(),
        );
        doc
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        self.to_document().write(path)
    }
}

/// Trajectories, events and object metadata read back from a scene file.
/// Missing radius/color fall back to `default_radius` and the id palette.
pub fn scene_parts_from_document(
    doc: &TrajectoryDocument,
    default_radius: f64,
) -> Result<(TrajectorySet, Vec<Event>, Vec<ObjectMeta>)> {
    let set = doc.to_set()?;
    let n = set.iter().map(|t| t.object_id as usize + 1).max().unwrap_or(1);
    let palette = assign_palette(n.clamp(1, crate::cond::MAX_PALETTE))?;
    let mut objects = Vec::with_capacity(doc.objects.len());
    for o in &doc.objects {
        let color = match o.color {
            Some(c) => c,
            None => palette.color(o.id)?,
        };
        objects.push(ObjectMeta {
            object_id: o.id,
            class: o.class.clone(),
            radius: o.radius.unwrap_or(default_radius),
            color,
        });
    }
    let events = doc
        .events
        .iter()
        .flatten()
        .map(|e| {
            Ok(Event {
                frame: e.frame,
                kind: EventKind::parse(&e.kind)?,
                ids: e.ids.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((set, events, objects))
}

pub fn simulate(cfg: &SceneConfig) -> Result<Scene> {
    match cfg.scenario {
        Scenario::Pool => simulate_pool(cfg),
        Scenario::Domino => simulate_domino(cfg),
        Scenario::Movi2d => simulate_movi2d(cfg),
    }
}

pub fn simulate_pool(cfg: &SceneConfig) -> Result<Scene> {
    expect_scenario(cfg, Scenario::Pool)?;
    Ok(discs::simulate_seeded(cfg)?.scene)
}

pub fn simulate_movi2d(cfg: &SceneConfig) -> Result<Scene> {
    expect_scenario(cfg, Scenario::Movi2d)?;
    Ok(discs::simulate_seeded(cfg)?.scene)
}

/// Seeded pool or movi2d run that also returns the per-collision audit log.
pub fn simulate_with_audit(cfg: &SceneConfig) -> Result<SimOutput> {
    if cfg.scenario == Scenario::Domino {
        return Err(Error::invalid("domino scenes have no collision audit"));
    }
    discs::simulate_seeded(cfg)
}

fn expect_scenario(cfg: &SceneConfig, want: Scenario) -> Result<()> {
    if cfg.scenario != want {
        return Err(Error::invalid(format!(
            "config is for {}, expected {want}",
            cfg.scenario
        )));
    }
    Ok(())
}
