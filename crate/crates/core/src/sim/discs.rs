use std::f64::consts::PI;

use rand::RngExt;

use super::{
    Body, BodyState, Event, EventKind, ObjectMeta, Scenario, Scene, SceneConfig, PLACEMENT_ATTEMPTS, REST_EPSILON,
};
use crate::cond::assign_palette;
use crate::error::{Error, Result};
use crate::geom::{clamp_to_frame, Point, Trajectory, TrajectorySet, Velocity};
use crate::seed;

/// Momentum and kinetic energy of a colliding pair around one impulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionRecord {
    pub frame: usize,
    pub ids: (u32, u32),
    pub momentum_before: (f64, f64),
    pub momentum_after: (f64, f64),
    /// Sum of `m |v|` over the pair before the impulse; a scale for relative
    /// momentum error that stays meaningful when the net momentum is zero.
    pub momentum_scale: f64,
    pub energy_before: f64,
    pub energy_after: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub scene: Scene,
    pub audit: Vec<CollisionRecord>,
}

const MAX_RESOLVE_PASSES: usize = 32;

/// Places bodies by per-object seeded rejection sampling, then simulates.
pub(super) fn simulate_seeded(cfg: &SceneConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let palette = assign_palette(cfg.objects)?;
    let r = cfg.body_radius;
    let (w, h) = (cfg.dims.width as f64 - 1.0, cfg.dims.height as f64 - 1.0);
    let pockets = pocket_centers(cfg);
    let label = cfg.scenario.as_str();
    let mut bodies: Vec<Body> = Vec::with_capacity(cfg.objects);
    for k in 0..cfg.objects {
        let mut rng = seed::stream(cfg.seed, label, k as u64);
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let lo_x = r.min(w / 2.0);
            let lo_y = r.min(h / 2.0);
            let p = Point::new(
                rng.random_range(lo_x..=(w - lo_x).max(lo_x)),
                rng.random_range(lo_y..=(h - lo_y).max(lo_y)),
            );
            let clear_of_bodies = bodies.iter().all(|b| b.position.distance(p) >= b.radius + r + 1e-9);
            let clear_of_pockets = pockets.iter().all(|c| c.distance(p) > cfg.pocket_radius + r);
            if clear_of_bodies && clear_of_pockets {
                placed = Some(p);
                break;
            }
        }
        let position = placed.ok_or(Error::CannotPlace {
            object: k,
            attempts: PLACEMENT_ATTEMPTS,
        })?;
        let heading = rng.random_range(0.0..2.0 * PI);
        let speed = match cfg.scenario {
            // cue ball breaks, the rest drift
            Scenario::Pool if k == 0 => rng.random_range(0.6..=1.0) * cfg.max_speed,
            Scenario::Pool => rng.random_range(0.0..=0.5) * cfg.max_speed,
            _ => rng.random_range(0.05..=1.0) * cfg.max_speed,
        };
        bodies.push(Body {
            object_id: k as u32,
            position,
            velocity: Velocity::new(speed * heading.cos(), speed * heading.sin()),
            radius: r,
            mass: 1.0,
            state: if speed > 0.0 {
                BodyState::Moving
            } else {
                BodyState::Resting
            },
            color: palette.colors[k],
        });
    }
    simulate_bodies(cfg, bodies)
}

fn pocket_centers(cfg: &SceneConfig) -> Vec<Point> {
    if cfg.scenario != Scenario::Pool || cfg.pocket_radius <= 0.0 {
        return Vec::new();
    }
    let (w, h) = (cfg.dims.width as f64 - 1.0, cfg.dims.height as f64 - 1.0);
    vec![
        Point::new(0.0, 0.0),
        Point::new(w / 2.0, 0.0),
        Point::new(w, 0.0),
        Point::new(0.0, h),
        Point::new(w / 2.0, h),
        Point::new(w, h),
    ]
}

struct World<'a> {
    cfg: &'a SceneConfig,
    bodies: Vec<Body>,
    pockets: Vec<Point>,
    events: Vec<Event>,
    audit: Vec<CollisionRecord>,
    frame: usize,
    touching: Vec<(usize, usize)>,
}

impl World<'_> {
    fn active(&self, i: usize) -> bool {
        !self.bodies[i].state.is_gone()
    }

    fn substep(&mut self) {
        let dt = 1.0 / self.cfg.substeps as f64;
        for b in self.bodies.iter_mut().filter(|b| b.state == BodyState::Moving) {
            b.position = Point::new(b.position.x + b.velocity.dx * dt, b.position.y + b.velocity.dy * dt);
        }
        self.resolve_contacts();
        let decay = 1.0 - self.cfg.friction;
        for b in self.bodies.iter_mut().filter(|b| b.state == BodyState::Moving) {
            b.velocity = Velocity::new(b.velocity.dx * decay, b.velocity.dy * decay);
        }
        self.check_removals();
        for i in 0..self.bodies.len() {
            let b = &mut self.bodies[i];
            if b.state == BodyState::Moving && b.velocity.magnitude() < REST_EPSILON {
                b.velocity = Velocity::ZERO;
                b.state = BodyState::Resting;
                let id = b.object_id;
                self.push_event(EventKind::Rest, vec![id]);
            }
        }
    }

    fn push_event(&mut self, kind: EventKind, ids: Vec<u32>) {
        self.events.push(Event {
            frame: self.frame,
            kind,
            ids,
        });
    }

    fn resolve_contacts(&mut self) {
        for _ in 0..MAX_RESOLVE_PASSES {
            let mut any = false;
            for i in 0..self.bodies.len() {
                for j in i + 1..self.bodies.len() {
                    if self.active(i) && self.active(j) {
                        any |= self.resolve_pair(i, j);
                    }
                }
            }
            if self.cfg.scenario == Scenario::Pool {
                any |= self.resolve_cushions();
            }
            if !any {
                break;
            }
        }
    }

    /// Returns whether the pair overlapped.
    fn resolve_pair(&mut self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.bodies[i], &self.bodies[j]);
        let d = b.position - a.position;
        let dist = d.magnitude();
        let reach = a.radius + b.radius;
        if dist >= reach {
            return false;
        }
        let (nx, ny) = if dist > 0.0 {
            (d.dx / dist, d.dy / dist)
        } else {
            (1.0, 0.0)
        };
        let (ma, mb) = (a.mass, b.mass);
        let (inv_a, inv_b) = (1.0 / ma, 1.0 / mb);
        let rel = (b.velocity.dx - a.velocity.dx) * nx + (b.velocity.dy - a.velocity.dy) * ny;
        if rel < 0.0 {
            let momentum = |a: &Body, b: &Body| {
                (
                    a.mass * a.velocity.dx + b.mass * b.velocity.dx,
                    a.mass * a.velocity.dy + b.mass * b.velocity.dy,
                )
            };
            let energy = |a: &Body, b: &Body| {
                0.5 * a.mass * (a.velocity.dx.powi(2) + a.velocity.dy.powi(2))
                    + 0.5 * b.mass * (b.velocity.dx.powi(2) + b.velocity.dy.powi(2))
            };
            let p0 = momentum(a, b);
            let e0 = energy(a, b);
            let scale = ma * a.velocity.magnitude() + mb * b.velocity.magnitude();
            let impulse = -(1.0 + self.cfg.restitution) * rel / (inv_a + inv_b);
            let (ja, jb) = (impulse * inv_a, impulse * inv_b);
            {
                let a = &mut self.bodies[i];
                a.velocity = Velocity::new(a.velocity.dx - ja * nx, a.velocity.dy - ja * ny);
            }
            {
                let b = &mut self.bodies[j];
                b.velocity = Velocity::new(b.velocity.dx + jb * nx, b.velocity.dy + jb * ny);
            }
            let (a, b) = (&self.bodies[i], &self.bodies[j]);
            self.audit.push(CollisionRecord {
                frame: self.frame,
                ids: (a.object_id, b.object_id),
                momentum_before: p0,
                momentum_after: momentum(a, b),
                momentum_scale: scale,
                energy_before: e0,
                energy_after: energy(a, b),
            });
            if !self.touching.contains(&(i, j)) {
                self.touching.push((i, j));
                let ids = vec![a.object_id, b.object_id];
                self.push_event(EventKind::Collision, ids);
            }
        }
        for k in [i, j] {
            let body = &mut self.bodies[k];
            if body.state == BodyState::Resting && body.velocity.magnitude() > 0.0 {
                body.state = BodyState::Moving;
            }
        }
        // separate to exact contact, split by inverse mass
        let overlap = reach - dist;
        let (sa, sb) = (inv_a / (inv_a + inv_b), inv_b / (inv_a + inv_b));
        let pa = self.bodies[i].position;
        let pb = self.bodies[j].position;
        self.bodies[i].position = Point::new(pa.x - nx * overlap * sa, pa.y - ny * overlap * sa);
        self.bodies[j].position = Point::new(pb.x + nx * overlap * sb, pb.y + ny * overlap * sb);
        true
    }

    /// Specular reflection off the table edges `[0, W-1] x [0, H-1]`.
    fn resolve_cushions(&mut self) -> bool {
        let (w, h) = (self.cfg.dims.width as f64 - 1.0, self.cfg.dims.height as f64 - 1.0);
        let e = self.cfg.restitution;
        let mut any = false;
        for b in self.bodies.iter_mut().filter(|b| !b.state.is_gone()) {
            let r = b.radius;
            let (lo_x, hi_x) = (r.min(w / 2.0), (w - r).max(w / 2.0));
            let (lo_y, hi_y) = (r.min(h / 2.0), (h - r).max(h / 2.0));
            let (mut x, mut y) = (b.position.x, b.position.y);
            let (mut vx, mut vy) = (b.velocity.dx, b.velocity.dy);
            if x < lo_x {
                x = (2.0 * lo_x - x).min(hi_x);
                vx = vx.abs() * e;
                any = true;
            } else if x > hi_x {
                x = (2.0 * hi_x - x).max(lo_x);
                vx = -vx.abs() * e;
                any = true;
            }
            if y < lo_y {
                y = (2.0 * lo_y - y).min(hi_y);
                vy = vy.abs() * e;
                any = true;
            } else if y > hi_y {
                y = (2.0 * hi_y - y).max(lo_y);
                vy = -vy.abs() * e;
                any = true;
            }
            b.position = Point::new(x, y);
            b.velocity = Velocity::new(vx, vy);
        }
        any
    }

    fn check_removals(&mut self) {
        let exits = self.cfg.scenario == Scenario::Movi2d;
        for i in 0..self.bodies.len() {
            if !self.active(i) {
                continue;
            }
            let p = self.bodies[i].position;
            let captured = self.pockets.iter().any(|c| c.distance(p) <= self.cfg.pocket_radius);
            let left = exits && !self.cfg.dims.contains(p);
            if captured || left {
                let b = &mut self.bodies[i];
                b.state = if captured {
                    BodyState::Captured
                } else {
                    BodyState::Exited
                };
                b.velocity = Velocity::ZERO;
                let id = b.object_id;
                let kind = if captured { EventKind::Pocket } else { EventKind::Exit };
                self.push_event(kind, vec![id]);
            }
        }
    }
}

/// Simulates explicit initial bodies under `cfg`'s rules (pool: cushions and
/// pockets; movi2d: open boundary). Bodies must have distinct ids `< 64`.
pub fn simulate_bodies(cfg: &SceneConfig, bodies: Vec<Body>) -> Result<SimOutput> {
    if cfg.scenario == Scenario::Domino {
        return Err(Error::invalid("use simulate_domino for domino scenes"));
    }
    if bodies.iter().any(|b| !(b.radius > 0.0) || !(b.mass > 0.0)) {
        return Err(Error::invalid("bodies need positive radius and mass"));
    }
    let f = cfg.frame_count;
    let n = bodies.len();
    let mut world = World {
        cfg,
        pockets: pocket_centers(cfg),
        bodies,
        events: Vec::new(),
        audit: Vec::new(),
        frame: 0,
        touching: Vec::new(),
    };
    let mut points = vec![Vec::with_capacity(f); n];
    let mut visible = vec![Vec::with_capacity(f); n];
    let record = |world: &World, points: &mut Vec<Vec<Point>>, visible: &mut Vec<Vec<bool>>| {
        for (k, b) in world.bodies.iter().enumerate() {
            let last = points[k].last().copied();
            let gone = b.state.is_gone();
            points[k].push(match (gone, last) {
                (true, Some(p)) => p,
                _ => b.position,
            });
            visible[k].push(!gone);
        }
    };
    record(&world, &mut points, &mut visible);
    for frame in 1..f {
        world.frame = frame;
        world.touching.clear();
        for _ in 0..cfg.substeps {
            world.substep();
        }
        record(&world, &mut points, &mut visible);
    }

    let mut trajectories = Vec::with_capacity(n);
    for (k, b) in world.bodies.iter().enumerate() {
        let t = Trajectory::with_visibility(
            b.object_id,
            std::mem::take(&mut points[k]),
            std::mem::take(&mut visible[k]),
        )?
        .with_class(if cfg.scenario == Scenario::Pool { "ball" } else { "disc" });
        trajectories.push(clamp_to_frame(&t, cfg.dims));
    }
    let objects = world
        .bodies
        .iter()
        .map(|b| ObjectMeta {
            object_id: b.object_id,
            class: trajectories[0].class.clone(),
            radius: b.radius,
            color: b.color,
        })
        .collect();
    Ok(SimOutput {
        scene: Scene {
            config: cfg.clone(),
            trajectories: TrajectorySet::new(trajectories, f, cfg.dims)?,
            events: world.events,
            objects,
        },
        audit: world.audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Dims;

    fn ball(id: u32, x: f64, y: f64, vx: f64, vy: f64) -> Body {
        Body {
            object_id: id,
            position: Point::new(x, y),
            velocity: Velocity::new(vx, vy),
            radius: 2.0,
            mass: 1.0,
            state: BodyState::Moving,
            color: [1.0, 0.0, 0.0],
        }
    }

    fn table(frames: usize) -> SceneConfig {
        let mut cfg = SceneConfig::new(Scenario::Pool, Dims::new(41, 21), frames, 2, 0);
        cfg.friction = 0.0;
        cfg.restitution = 1.0;
        cfg.pocket_radius = 0.0;
        cfg
    }

    #[test]
    fn cushion_reflection_preserves_speed() {
        let cfg = table(30);
        let out = simulate_bodies(&cfg, vec![ball(0, 30.0, 10.0, 1.5, 0.0)]).unwrap();
        let xs: Vec<f64> = out.scene.trajectories.trajectories[0]
            .points
            .iter()
            .map(|p| p.x)
            .collect();
        // right cushion at 40 - 2 = 38; 30 -> 38 takes 5.33 frames
        assert!((xs[5] - 37.5).abs() < 1e-9);
        assert!((xs[6] - 37.0).abs() < 1e-9);
        assert!((xs[10] - 31.0).abs() < 1e-9);
        for w in xs.windows(2) {
            assert!(((w[1] - w[0]).abs() - 1.5).abs() < 1e-9 || w[1] > 36.0);
        }
    }

    #[test]
    fn equal_mass_head_on_exchange() {
        let cfg = table(12);
        let out = simulate_bodies(&cfg, vec![ball(0, 10.0, 10.0, 1.0, 0.0), ball(1, 20.0, 10.0, 0.0, 0.0)]).unwrap();
        let t = &out.scene.trajectories.trajectories;
        let v0 = t[0].points[11].x - t[0].points[10].x;
        let v1 = t[1].points[11].x - t[1].points[10].x;
        assert!(v0.abs() < 1e-12, "{v0}");
        assert!((v1 - 1.0).abs() < 1e-12, "{v1}");
        assert_eq!(out.audit.len(), 1);
        assert_eq!(out.scene.events_of(EventKind::Collision).count(), 1);
    }

    #[test]
    fn pocket_capture_hides_ball() {
        let mut cfg = table(20);
        cfg.pocket_radius = 4.0;
        let out = simulate_bodies(&cfg, vec![ball(0, 10.0, 10.0, -1.0, -1.0)]).unwrap();
        let t = &out.scene.trajectories.trajectories[0];
        let ev = out.scene.events_of(EventKind::Pocket).next().expect("pocketed");
        assert!(t.visible[..ev.frame].iter().all(|&v| v));
        assert!(t.visible[ev.frame..].iter().all(|&v| !v));
    }

    #[test]
    fn movi_exit() {
        let mut cfg = table(20);
        cfg.scenario = Scenario::Movi2d;
        let out = simulate_bodies(&cfg, vec![ball(0, 30.0, 10.0, 2.0, 0.0)]).unwrap();
        let t = &out.scene.trajectories.trajectories[0];
        // x reaches 41 (outside [0, 41)) at frame 5.5 -> first out-of-bounds frame 6
        let ev = out.scene.events_of(EventKind::Exit).next().unwrap();
        assert_eq!(ev.frame, 6);
        assert!(t.visible[..6].iter().all(|&v| v));
        assert!(t.visible[6..].iter().all(|&v| !v));
        assert!(t.points.iter().all(|p| p.x <= 40.0));
    }
}
