use super::compensated_sum;
use super::hungarian::{hungarian, CostMatrix, Matching};
use crate::error::{Error, Result};
use crate::geom::{Trajectory, TrajectorySet};

/// Sum over frames of the squared Euclidean distance between same-frame
/// points (pixels squared).
pub fn traj_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.points.len() != b.points.len() {
        return Err(Error::shape(format!(
            "trajectories {} and {} have {} and {} frames",
            a.object_id,
            b.object_id,
            a.points.len(),
            b.points.len()
        )));
    }
    Ok(compensated_sum(a.points.iter().zip(&b.points).map(|(p, q)| {
        let (dx, dy) = (p.x - q.x, p.y - q.y);
        dx * dx + dy * dy
    })))
}

/// `entries[i][j] = traj_distance(a[i], b[j])`.
pub fn build_cost_matrix(a: &TrajectorySet, b: &TrajectorySet) -> Result<CostMatrix> {
    let mut entries = Vec::with_capacity(a.len() * b.len());
    for ta in a.iter() {
        for tb in b.iter() {
            entries.push(traj_distance(ta, tb)?);
        }
    }
    CostMatrix::new(a.len(), b.len(), entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtemScore {
    /// Total matched squared distance (pixels squared).
    pub raw_total: f64,
    /// Mean per-pair RMS displacement as a percentage of the frame diagonal.
    pub normalized_percent: f64,
    /// Matching between indices of the first and second set.
    pub pairs: Matching,
    /// `traj_distance` of each matched pair, aligned with `pairs.pairs`.
    pub pair_distances: Vec<f64>,
    /// `||T1| - |T2||`, reported separately from the percentage.
    pub cardinality_penalty_count: usize,
}

/// Matching trajectory error between a reference set and a generated set.
///
/// Both sets should already be gap-filled; only `points` are read.
pub fn mtem_score(gt: &TrajectorySet, gen: &TrajectorySet) -> Result<MtemScore> {
    if gt.is_empty() || gen.is_empty() {
        return Err(Error::invalid(format!(
            "MTEM needs non-empty sets (got {} and {} trajectories)",
            gt.len(),
            gen.len()
        )));
    }
    if gt.dims != gen.dims || gt.frame_count != gen.frame_count {
        return Err(Error::shape(format!(
            "sets differ: {:?}/{} frames vs {:?}/{} frames",
            gt.dims, gt.frame_count, gen.dims, gen.frame_count
        )));
    }
    let cost = build_cost_matrix(gt, gen)?;
    let matching = hungarian(&cost)?;
    let pair_distances: Vec<f64> = matching.pairs.iter().map(|&(i, j)| cost.get(i, j)).collect();
    let frames = gt.frame_count.max(1) as f64;
    let diag = gt.dims.diagonal();
    // sorted so the result does not depend on which set is first
    let mut terms: Vec<f64> = pair_distances.iter().map(|d| (d / frames).sqrt() / diag).collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    let normalized_percent = 100.0 * compensated_sum(terms) / matching.pairs.len() as f64;
    let mut sorted = pair_distances.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(MtemScore {
        raw_total: compensated_sum(sorted),
        normalized_percent,
        pairs: matching,
        pair_distances,
        cardinality_penalty_count: gt.len().abs_diff(gen.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Dims, Point, Velocity};

    fn line(id: u32, frames: usize, x0: f64, y0: f64, vx: f64, vy: f64) -> Trajectory {
        Trajectory::new(
            id,
            (0..frames)
                .map(|i| Point::new(x0 + vx * i as f64, y0 + vy * i as f64))
                .collect(),
        )
    }

    #[test]
    fn distance_examples() {
        let a = line(0, 10, 1.0, 2.0, 0.5, 0.25);
        assert_eq!(traj_distance(&a, &a).unwrap(), 0.0);
        let b = a.translated(Velocity::new(3.0, 4.0));
        assert!((traj_distance(&a, &b).unwrap() - 250.0).abs() < 1e-9);
        let short = line(1, 9, 0.0, 0.0, 0.0, 0.0);
        assert!(traj_distance(&a, &short).is_err());
    }

    #[test]
    fn self_score_zero() {
        let d = Dims::new(64, 48);
        let set = TrajectorySet::new(
            vec![line(0, 8, 1.0, 1.0, 1.0, 0.0), line(1, 8, 30.0, 30.0, -1.0, 0.5)],
            8,
            d,
        )
        .unwrap();
        let s = mtem_score(&set, &set).unwrap();
        assert_eq!(s.normalized_percent, 0.0);
        assert_eq!(s.raw_total, 0.0);
        assert_eq!(s.cardinality_penalty_count, 0);
    }

    #[test]
    fn offset_closed_form() {
        let d = Dims::new(30, 40); // diagonal 50
        let a = line(0, 12, 5.0, 5.0, 1.0, 1.0);
        let b = a.translated(Velocity::new(3.0, 4.0)); // |offset| = 5 = diag / 10
        let ga = TrajectorySet::new(vec![a], 12, d).unwrap();
        let gb = TrajectorySet::new(vec![b], 12, d).unwrap();
        let s = mtem_score(&ga, &gb).unwrap();
        assert!((s.normalized_percent - 10.0).abs() <= 1e-9);
        assert!((s.raw_total - 12.0 * 25.0).abs() <= 1e-9);
    }

    #[test]
    fn cardinality_reported() {
        let d = Dims::new(16, 16);
        let a = TrajectorySet::new(vec![line(0, 3, 1.0, 1.0, 0.0, 0.0)], 3, d).unwrap();
        let b = TrajectorySet::new(
            vec![line(0, 3, 9.0, 9.0, 0.0, 0.0), line(1, 3, 1.0, 1.0, 0.0, 0.0)],
            3,
            d,
        )
        .unwrap();
        let s = mtem_score(&a, &b).unwrap();
        assert_eq!(s.cardinality_penalty_count, 1);
        assert_eq!(s.pairs.pairs, vec![(0, 1)]);
        assert_eq!(s.normalized_percent, 0.0);
    }

    #[test]
    fn rejects_empty_and_mismatch() {
        let d = Dims::new(16, 16);
        let a = TrajectorySet::new(vec![line(0, 3, 1.0, 1.0, 0.0, 0.0)], 3, d).unwrap();
        assert!(mtem_score(&a, &TrajectorySet::empty(3, d)).is_err());
        let b = TrajectorySet::new(vec![line(0, 3, 1.0, 1.0, 0.0, 0.0)], 3, Dims::new(8, 8)).unwrap();
        assert!(mtem_score(&a, &b).is_err());
    }
}
