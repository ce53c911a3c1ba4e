//! Trajectory toolkit: geometry, a seeded 2D interaction simulator, the
//! sparse-pose / object-ID conditioning encoders, and trajectory and pixel
//! metrics.

pub mod cond;
pub mod error;
pub mod eval;
pub mod geom;
pub mod io;
pub mod raster;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use geom::{Dims, Point, Trajectory, TrajectorySet, Velocity};
pub use raster::{ByteVideo, Video};
