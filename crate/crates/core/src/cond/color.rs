use crate::error::{Error, Result};
use crate::geom::Velocity;

pub type Rgb = [f64; 3];

/// Standard HSV to RGB with `hue` in degrees and `s`, `v` in `[0, 1]`.
pub fn hsv_to_rgb(hue: f64, s: f64, v: f64) -> Rgb {
    let h = hue.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Color-wheel encoding of a velocity: hue from direction, saturation from
/// speed relative to `v_max`, full value.
pub fn velocity_to_color(v: Velocity, v_max: f64) -> Result<Rgb> {
    if !(v_max > 0.0) {
        return Err(Error::invalid(format!("v_max must be positive, got {v_max}")));
    }
    let hue = v.dy.atan2(v.dx).to_degrees().rem_euclid(360.0);
    let sat = (v.magnitude() / v_max).min(1.0);
    Ok(hsv_to_rgb(hue, sat, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Rgb, b: Rgb) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn axis_cases() {
        assert!(close(
            velocity_to_color(Velocity::new(4.0, 0.0), 4.0).unwrap(),
            [1.0, 0.0, 0.0]
        ));
        assert!(close(velocity_to_color(Velocity::ZERO, 4.0).unwrap(), [1.0, 1.0, 1.0]));
        assert!(close(
            velocity_to_color(Velocity::new(-9.0, 0.0), 4.0).unwrap(),
            [0.0, 1.0, 1.0]
        ));
    }

    /// `f(n) = v - v s max(0, min(k, 4 - k, 1))`, `k = (n + h / 60) mod 6`.
    fn hsv_oracle(h: f64, s: f64, v: f64) -> Rgb {
        let f = |n: f64| {
            let k = (n + h / 60.0).rem_euclid(6.0);
            v - v * s * k.min(4.0 - k).clamp(0.0, 1.0)
        };
        [f(5.0), f(3.0), f(1.0)]
    }

    #[test]
    fn quarter_turn_half_speed() {
        let c = velocity_to_color(Velocity::new(0.0, 2.0), 4.0).unwrap();
        assert!(close(c, hsv_oracle(90.0, 0.5, 1.0)));
        assert!(close(c, [0.75, 1.0, 0.5]));
    }

    #[test]
    fn matches_oracle_around_the_wheel() {
        for i in 0..720 {
            let hue = i as f64 * 0.5;
            for s in [0.0, 0.3, 1.0] {
                assert!(close(hsv_to_rgb(hue, s, 1.0), hsv_oracle(hue, s, 1.0)), "{hue} {s}");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_vmax() {
        assert!(velocity_to_color(Velocity::new(1.0, 0.0), 0.0).is_err());
        assert!(velocity_to_color(Velocity::new(1.0, 0.0), f64::NAN).is_err());
    }
}
