use proptest::prelude::*;
use trajdiff_core::geom::{cumulative_flow, diff, resample_polyline, Point, Trajectory, Velocity};

fn arb_polyline() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..8)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(x, y)).collect())
}

/// Arc-length position of `p` on the polyline, by dense projection.
fn arc_position(poly: &[Point], p: Point) -> f64 {
    let mut best = (f64::MAX, 0.0);
    let mut walked = 0.0;
    for w in poly.windows(2) {
        let len = w[0].distance(w[1]);
        for s in 0..=2000 {
            let u = s as f64 / 2000.0;
            let q = Point::new(w[0].x + u * (w[1].x - w[0].x), w[0].y + u * (w[1].y - w[0].y));
            let d = q.distance(p);
            if d < best.0 {
                best = (d, walked + u * len);
            }
        }
        walked += len;
    }
    best.1
}

/// Walks the polyline to arc length `s`.
fn point_at_arc(poly: &[Point], s: f64) -> Point {
    let mut left = s;
    for w in poly.windows(2) {
        let len = w[0].distance(w[1]);
        if left <= len && len > 0.0 {
            let u = left / len;
            return Point::new(w[0].x + u * (w[1].x - w[0].x), w[0].y + u * (w[1].y - w[0].y));
        }
        left -= len;
    }
    *poly.last().unwrap()
}

#[test]
fn l_shape_matches_dense_sampling() {
    let poly = [Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(3.0, 4.0)];
    let t = resample_polyline(&poly, 8).unwrap();
    for (i, p) in t.points.iter().enumerate() {
        assert!((arc_position(&poly, *p) - i as f64).abs() < 5e-3, "frame {i}");
    }
    assert!((t.points[4].x - 3.0).abs() < 1e-12 && (t.points[4].y - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn resample_length_and_spacing(poly in arb_polyline(), frames in 1usize..40) {
        let t = resample_polyline(&poly, frames).unwrap();
        prop_assert_eq!(t.points.len(), frames);
        prop_assert_eq!(t.visible.len(), frames);
        let total: f64 = poly.windows(2).map(|w| w[0].distance(w[1])).sum();
        if frames >= 2 {
            let step = total / (frames - 1) as f64;
            for (i, p) in t.points.iter().enumerate() {
                let q = point_at_arc(&poly, step * i as f64);
                prop_assert!(q.distance(*p) <= 1e-6 * total + 1e-12, "frame {}", i);
            }
        }
    }

    #[test]
    fn flow_telescopes(pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..50)) {
        let t = Trajectory::new(0, pts.iter().map(|&(x, y)| Point::new(x, y)).collect());
        let flow = cumulative_flow(&diff(&t).unwrap());
        prop_assert_eq!(flow.len(), t.points.len());
        let p0 = t.points[0];
        let scale = pts.iter().map(|&(x, y)| x.abs().max(y.abs())).fold(1.0, f64::max);
        for (f, p) in flow.iter().zip(&t.points) {
            prop_assert!((f.dx - (p.x - p0.x)).abs() <= 1e-9 * scale * pts.len() as f64);
            prop_assert!((f.dy - (p.y - p0.y)).abs() <= 1e-9 * scale * pts.len() as f64);
        }
    }

    #[test]
    fn diff_translation_invariant(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..20),
        cx in -1e3f64..1e3, cy in -1e3f64..1e3,
    ) {
        let t = Trajectory::new(0, pts.iter().map(|&(x, y)| Point::new(x, y)).collect());
        let moved = t.translated(Velocity::new(cx, cy));
        let (a, b) = (diff(&t).unwrap(), diff(&moved).unwrap());
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u.dx - v.dx).abs() < 1e-9 && (u.dy - v.dy).abs() < 1e-9);
        }
    }
}
