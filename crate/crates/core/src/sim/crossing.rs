use std::f64::consts::PI;

use rand::RngExt;

use super::{simulate_bodies, Body, BodyState, Scenario, Scene, SceneConfig};
use crate::cond::assign_palette;
use crate::error::Result;
use crate::geom::{Dims, Point, Velocity};
use crate::seed;

/// Two pool balls aimed at nearly the same point near the table center, so
/// their paths cross (or they collide) around mid-clip. Pockets are disabled.
pub fn near_crossing_pool(dims: Dims, frame_count: usize, seed: u64) -> Result<Scene> {
    let mut cfg = SceneConfig::new(Scenario::Pool, dims, frame_count, 2, seed);
    cfg.pocket_radius = 0.0;
    cfg.validate()?;
    let mut rng = seed::stream(seed, "crossing", 0);
    let (w, h) = (dims.width as f64 - 1.0, dims.height as f64 - 1.0);
    let r = cfg.body_radius;
    let side = w.min(h);
    let target = Point::new(
        w / 2.0 + rng.random_range(-0.1..=0.1) * side,
        h / 2.0 + rng.random_range(-0.1..=0.1) * side,
    );
    let heading0 = rng.random_range(0.0..2.0 * PI);
    let turn = rng.random_range(PI / 3.0..=2.0 * PI / 3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let palette = assign_palette(2)?;
    let half_time = frame_count.max(2) as f64 / 2.0;
    let mut bodies = Vec::with_capacity(2);
    for (k, heading) in [heading0, heading0 + turn].into_iter().enumerate() {
        let dist = rng.random_range(0.25..=0.4) * side;
        let start = Point::new(
            (target.x - dist * heading.cos()).clamp(r, w - r),
            (target.y - dist * heading.sin()).clamp(r, h - r),
        );
        // miss the shared target by up to one radius, arrive near mid-clip
        let aim = Point::new(target.x + rng.random_range(-r..=r), target.y + rng.random_range(-r..=r));
        let arrival = half_time * rng.random_range(0.8..=1.2);
        let v = aim - start;
        bodies.push(Body {
            object_id: k as u32,
            position: start,
            velocity: Velocity::new(v.dx / arrival, v.dy / arrival),
            radius: r,
            mass: 1.0,
            state: BodyState::Moving,
            color: palette.colors[k],
        });
    }
    if bodies[0].position.distance(bodies[1].position) < 2.0 * r {
        // both starts clamped into the same corner; push the second one across
        let p = bodies[1].position;
        bodies[1].position = Point::new(w - p.x, h - p.y);
    }
    Ok(simulate_bodies(&cfg, bodies)?.scene)
}
