use super::ingest::DetectionRecord;
use crate::cond::IdPalette;
use crate::error::{Error, Result};
use crate::geom::{Dims, Point, Trajectory, TrajectorySet};
use crate::raster::ByteVideo;

/// RGB distance (components in `[0, 1]`) within which a pixel counts as a
/// palette color.
pub const MATCH_DISTANCE: f64 = 0.25;
/// Fewer matching pixels than this in a frame means "not detected".
pub const MIN_PIXELS: usize = 3;

/// Color-keyed centroid tracker. Object `k` of the result follows palette
/// color `k`; undetected frames are invisible and their points are
/// placeholders until [`super::fill_gaps`] runs.
pub fn extract_trajectories_toy(frames: &ByteVideo, palette: &IdPalette) -> Result<TrajectorySet> {
    if palette.is_empty() {
        return Err(Error::invalid("empty palette"));
    }
    let n = palette.len();
    let mut points = vec![vec![Point::default(); frames.frames]; n];
    let mut visible = vec![vec![false; frames.frames]; n];
    let thresh2 = MATCH_DISTANCE * MATCH_DISTANCE;
    for f in 0..frames.frames {
        let frame = frames.frame(f);
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); n];
        for y in 0..frames.height {
            for x in 0..frames.width {
                let i = (y * frames.width + x) * 3;
                let px = [
                    frame[i] as f64 / 255.0,
                    frame[i + 1] as f64 / 255.0,
                    frame[i + 2] as f64 / 255.0,
                ];
                for (k, c) in palette.colors.iter().enumerate() {
                    let d2: f64 = (0..3).map(|ch| (px[ch] - c[ch]).powi(2)).sum();
                    if d2 <= thresh2 {
                        sums[k].0 += x as f64;
                        sums[k].1 += y as f64;
                        sums[k].2 += 1;
                    }
                }
            }
        }
        for (k, &(sx, sy, count)) in sums.iter().enumerate() {
            if count >= MIN_PIXELS {
                points[k][f] = Point::new(sx / count as f64, sy / count as f64);
                visible[k][f] = true;
            }
        }
    }
    let trajectories = points
        .into_iter()
        .zip(visible)
        .enumerate()
        .map(|(k, (p, v))| Trajectory::with_visibility(k as u32, p, v))
        .collect::<Result<Vec<_>>>()?;
    TrajectorySet::new(
        trajectories,
        frames.frames,
        Dims::new(frames.width as u32, frames.height as u32),
    )
}

/// Extraction followed by gap filling. An object never detected in any frame
/// is placed at the frame center for the whole clip so that it still counts
/// in the match.
pub fn extract_filled(frames: &ByteVideo, palette: &IdPalette) -> Result<TrajectorySet> {
    let mut raw = extract_trajectories_toy(frames, palette)?;
    let center = Point::new((frames.width as f64 - 1.0) / 2.0, (frames.height as f64 - 1.0) / 2.0);
    for t in &mut raw.trajectories {
        if !t.visible.iter().any(|&v| v) {
            t.points.fill(center);
            t.visible.fill(true);
        }
    }
    super::fill_gaps(&raw)
}

/// Visible points of a set as detection records, ordered by frame then id.
pub fn trajectories_to_detections(set: &TrajectorySet) -> Vec<DetectionRecord> {
    let mut out = Vec::new();
    for f in 0..set.frame_count {
        for t in set.iter() {
            if t.visible[f] {
                out.push(DetectionRecord {
                    frame: f as i64,
                    object_id: t.object_id,
                    x: t.points[f].x,
                    y: t.points[f].y,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cond::assign_palette;
    use crate::raster::fill_disc;

    #[test]
    fn black_frames_detect_nothing() {
        let v = ByteVideo::black(3, 16, 16);
        let set = extract_trajectories_toy(&v, &assign_palette(2).unwrap()).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.iter().all(|t| t.visible.iter().all(|&v| !v)));
    }

    #[test]
    fn two_discs_in_palette_order() {
        let pal = assign_palette(2).unwrap();
        let bytes = pal.bytes();
        let mut v = ByteVideo::black(1, 20, 20);
        fill_disc(v.frame_mut(0), 20, 20, 14.0, 5.0, 2.0, bytes[1]);
        fill_disc(v.frame_mut(0), 20, 20, 4.0, 12.0, 2.0, bytes[0]);
        let set = extract_trajectories_toy(&v, &pal).unwrap();
        assert_eq!(set.trajectories[0].points[0], Point::new(4.0, 12.0));
        assert_eq!(set.trajectories[1].points[0], Point::new(14.0, 5.0));
    }

    #[test]
    fn too_few_pixels() {
        let pal = assign_palette(1).unwrap();
        let mut v = ByteVideo::black(1, 8, 8);
        v.frame_mut(0)[0] = 255;
        v.frame_mut(0)[3] = 255;
        let set = extract_trajectories_toy(&v, &pal).unwrap();
        assert!(!set.trajectories[0].visible[0]);
    }

    #[test]
    fn empty_palette_rejected() {
        let pal = IdPalette { colors: vec![] };
        assert!(extract_trajectories_toy(&ByteVideo::black(1, 4, 4), &pal).is_err());
    }

    #[test]
    fn filled_falls_back_to_center() {
        let pal = assign_palette(2).unwrap();
        let mut v = ByteVideo::black(3, 9, 9);
        fill_disc(v.frame_mut(1), 9, 9, 2.0, 2.0, 1.5, pal.bytes()[0]);
        let set = extract_filled(&v, &pal).unwrap();
        assert!(set.trajectories[0].points.iter().all(|p| *p == Point::new(2.0, 2.0)));
        assert!(set.trajectories[1].points.iter().all(|p| *p == Point::new(4.0, 4.0)));
    }
}
