use std::f64::consts::FRAC_PI_2;

use rand::RngExt;

use super::{DominoParams, Event, EventKind, ObjectMeta, Scenario, Scene, SceneConfig};
use crate::cond::assign_palette;
use crate::error::{Error, Result};
use crate::geom::{clamp_to_frame, Point, Trajectory, TrajectorySet};
use crate::seed;

/// Frames between a domino starting to fall and it striking the next one, or
/// `None` when the next domino is out of reach (`spacing >= height`).
///
/// A falling domino's angle grows linearly to 90 degrees over `topple_frames`;
/// its top edge reaches the next base at `asin(spacing / height)`.
pub fn contact_delay(p: &DominoParams) -> Option<usize> {
    if p.spacing >= p.height {
        return None;
    }
    let contact_angle = (p.spacing / p.height).asin();
    let frames = (p.topple_frames as f64 * contact_angle / FRAC_PI_2).ceil() as usize;
    Some(frames.max(1))
}

/// Dominoes along a seeded curved path. The chain falls kinematically: each
/// domino starts toppling when its predecessor's top edge reaches it, then
/// leans on its successor (the last one lies flat). Trajectories follow the
/// top-edge midpoint as seen from above.
pub fn simulate_domino(cfg: &SceneConfig) -> Result<Scene> {
    if cfg.scenario != Scenario::Domino {
        return Err(Error::invalid(format!(
            "config is for {}, expected domino",
            cfg.scenario
        )));
    }
    cfg.validate()?;
    let p = &cfg.domino;
    if p.spacing < p.thickness {
        return Err(Error::InvalidSpacing {
            spacing: p.spacing,
            thickness: p.thickness,
        });
    }
    if !(p.height > 0.0) || p.topple_frames == 0 {
        return Err(Error::invalid("domino height and topple_frames must be positive"));
    }
    let n = cfg.objects;
    let palette = assign_palette(n)?;

    // path geometry, centered in the frame
    let mut heading = seed::stream(cfg.seed, "domino/path", 0).random_range(0.0..std::f64::consts::TAU);
    let mut bases = vec![Point::new(0.0, 0.0)];
    let mut headings = vec![heading];
    for k in 1..n {
        let turn = seed::stream(cfg.seed, "domino", k as u64).random_range(-p.max_turn..=p.max_turn);
        heading += turn;
        let prev = bases[k - 1];
        bases.push(Point::new(
            prev.x + p.spacing * heading.cos(),
            prev.y + p.spacing * heading.sin(),
        ));
        headings.push(heading);
    }
    let (min_x, max_x) = bases
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), q| (a.min(q.x), b.max(q.x)));
    let (min_y, max_y) = bases
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), q| (a.min(q.y), b.max(q.y)));
    let cx = (cfg.dims.width as f64 - 1.0) / 2.0 - (min_x + max_x) / 2.0;
    let cy = (cfg.dims.height as f64 - 1.0) / 2.0 - (min_y + max_y) / 2.0;
    for b in &mut bases {
        *b = Point::new(b.x + cx, b.y + cy);
    }
    let directions: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let h = if k + 1 < n { headings[k + 1] } else { headings[k] };
            (h.cos(), h.sin())
        })
        .collect();

    let delay = contact_delay(p);
    let mut triggers: Vec<Option<usize>> = vec![None; n];
    triggers[0] = p.trigger_frame.filter(|&t| t < cfg.frame_count);
    for k in 1..n {
        triggers[k] = match (triggers[k - 1], delay) {
            (Some(t), Some(c)) if t + c < cfg.frame_count => Some(t + c),
            _ => None,
        };
    }

    let mut events = Vec::new();
    let mut trajectories = Vec::with_capacity(n);
    for k in 0..n {
        let leans = k + 1 < n && delay.is_some();
        let rest_angle = if leans {
            (p.spacing / p.height).asin()
        } else {
            FRAC_PI_2
        };
        let (dx, dy) = directions[k];
        let mut points = Vec::with_capacity(cfg.frame_count);
        let mut rested = false;
        for f in 0..cfg.frame_count {
            let angle = match triggers[k] {
                Some(t) if f >= t => {
                    let free = FRAC_PI_2 * ((f - t) as f64 / p.topple_frames as f64).min(1.0);
                    free.min(rest_angle)
                }
                _ => 0.0,
            };
            if f == triggers[k].unwrap_or(usize::MAX) {
                events.push(Event {
                    frame: f,
                    kind: EventKind::Topple,
                    ids: vec![k as u32],
                });
            }
            if !rested && angle >= rest_angle {
                rested = true;
                events.push(Event {
                    frame: f,
                    kind: EventKind::Rest,
                    ids: vec![k as u32],
                });
            }
            let reach = p.height * angle.sin();
            points.push(Point::new(bases[k].x + reach * dx, bases[k].y + reach * dy));
        }
        let t = Trajectory::new(k as u32, points).with_class("domino");
        trajectories.push(clamp_to_frame(&t, cfg.dims));
    }
    events.sort_by_key(|e| e.frame);

    let radius = (0.5 * p.thickness).max(1.0);
    let objects = (0..n)
        .map(|k| ObjectMeta {
            object_id: k as u32,
            class: "domino".to_string(),
            radius,
            color: palette.colors[k],
        })
        .collect();
    Ok(Scene {
        config: cfg.clone(),
        trajectories: TrajectorySet::new(trajectories, cfg.frame_count, cfg.dims)?,
        events,
        objects,
    })
}
