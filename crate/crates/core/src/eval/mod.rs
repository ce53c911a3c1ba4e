//! Trajectory evaluation: detection ingestion, gap filling, matching-based
//! trajectory error (MTEM), a color-keyed toy extractor, and PSNR/SSIM.

mod extract;
mod hungarian;
mod ingest;
mod mtem;
mod pixel;

pub use extract::{extract_filled, extract_trajectories_toy, trajectories_to_detections, MATCH_DISTANCE, MIN_PIXELS};
pub use hungarian::{hungarian, CostMatrix, Matching};
pub use ingest::{fill_gaps, ingest_detections, DetectionRecord};
pub use mtem::{build_cost_matrix, mtem_score, traj_distance, MtemScore};
pub use pixel::{psnr, psnr_capped, ssim, PSNR_CAP_DB};

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
