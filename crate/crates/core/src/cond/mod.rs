//! Pixel-space conditioning: color-wheel sparse-pose maps for moving objects
//! and constant-color object-ID maps for every visible object.

mod blur;
mod color;
mod maps;
mod palette;

pub use blur::{gaussian_blur, gaussian_kernel};
pub use color::{hsv_to_rgb, velocity_to_color, Rgb};
pub use maps::{
    default_point_radius, draw_object_id, draw_sparse_pose, velocity_percentile, ConditionStack, Modality,
    SparsePoseParams, STATIC_EPSILON,
};
pub use palette::{assign_palette, IdPalette, MAX_PALETTE};
