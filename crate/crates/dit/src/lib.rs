//! Autodiff tensors and a small factorized spatial/temporal diffusion
//! transformer for trajectory-conditioned toy videos.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod graph;
pub mod model;
pub mod sample;
pub mod schedule;
pub mod tensor;
pub mod train;
pub mod vae;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{parse_flat, ConditionMode, DitConfig};
pub use data::{cond_latents, objects_example, objects_latent, scene_example, scene_latent};
pub use error::{Error, Result};
pub use graph::{Graph, Var};
pub use model::{bind, dit_forward, init_params, interaction_encoder, patchify, CondLatents, Params};
pub use sample::sample;
pub use schedule::{add_noise, NoiseSchedule};
pub use tensor::{Scalar, Tensor};
pub use train::{Adam, Example, Trainer};
pub use vae::{vae_stub_decode, vae_stub_encode};
