//! File formats: trajectory/scene JSON, binary PPM frames, detection CSV.

pub mod detections;
pub mod json;
pub mod ppm;

pub use detections::{read_detections, write_detections};
pub use json::{read_trajectories, write_trajectories, EventRecord, ObjectRecord, TrajectoryDocument};
pub use ppm::{read_ppm, read_ppm_stack, write_ppm, write_ppm_stack};
