use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use trajdiff_core::{seed, Video};

use crate::config::DitConfig;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{bind, condition_tokens, dit_forward, CondLatents, Params};
use crate::schedule::NoiseSchedule;
use crate::tensor::{Scalar, Tensor};
use crate::vae::vae_stub_decode;

/// Maps a `[-1, 1]` model latent to the `[0, 1]` stub-VAE range.
pub fn latent_to_unit<T: Scalar>(z: &Tensor<T>) -> Tensor<T> {
    let half = T::of(0.5);
    Tensor {
        shape: z.shape.clone(),
        data: z.data.iter().map(|&x| (x + T::one()) * half).collect(),
    }
}

/// Maps a `[0, 1]` stub-VAE latent to the model's `[-1, 1]` range.
pub fn unit_to_latent<T: Scalar>(z: &Tensor<T>) -> Tensor<T> {
    let two = T::of(2.0);
    Tensor {
        shape: z.shape.clone(),
        data: z.data.iter().map(|&x| x * two - T::one()).collect(),
    }
}

fn draw(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for x in out {
        *x = StandardNormal.sample(rng);
    }
}

/// Ancestral sampling of one video per seed. `cond`, when the model uses it,
/// holds one batch element per seed. Each element has its own noise stream,
/// so results do not depend on how seeds are batched.
///
/// Each step predicts the noise, forms the clean-latent estimate clipped to
/// `[-1, 1]`, and draws from the Gaussian posterior `q(z_{t-1} | z_t, z_0)`;
/// the last step adds no noise. Output frames are decoded and clamped to `[0, 1]`.
pub fn sample<T: Scalar>(
    params: &Params<T>,
    cfg: &DitConfig,
    sched: &NoiseSchedule,
    cond: Option<&CondLatents<T>>,
    seeds: &[u64],
) -> Result<Vec<Video>> {
    cfg.validate()?;
    if sched.steps != cfg.steps {
        return Err(Error::Config(format!(
            "schedule has {} steps, model expects {}",
            sched.steps, cfg.steps
        )));
    }
    let b = seeds.len();
    let (lh, lw) = cfg.latent_dims();
    let shape = vec![b, cfg.frames, lh, lw, cfg.channels];
    let per = cfg.frames * lh * lw * cfg.channels;
    let mut rngs: Vec<ChaCha8Rng> = seeds.iter().map(|&s| seed::stream(s, "sample", 0)).collect();
    let mut z = vec![0.0f64; b * per];
    for (rng, chunk) in rngs.iter_mut().zip(z.chunks_mut(per)) {
        draw(rng, chunk);
    }
    let mut noise = vec![0.0f64; per];
    for t in (1..=cfg.steps).rev() {
        let eps_hat = {
            let mut g = Graph::new();
            let p = bind(&mut g, params, false);
            let c = condition_tokens(&mut g, &p, cfg, cond)?;
            let x = g.constant(Tensor::new(shape.clone(), z.iter().map(|&v| T::of(v)).collect())?);
            let f = dit_forward(&mut g, &p, cfg, x, &vec![t; b], c)?;
            g.value(f.prediction).to_f64_vec()
        };
        let ab = sched.alpha_bar[t];
        let ab_prev = sched.alpha_bar[t - 1];
        let beta = sched.betas[t];
        let c0 = ab_prev.sqrt() * beta / (1.0 - ab);
        let ct = (1.0 - beta).sqrt() * (1.0 - ab_prev) / (1.0 - ab);
        let sigma = (beta * (1.0 - ab_prev) / (1.0 - ab)).sqrt();
        for (rng, (zc, ec)) in rngs.iter_mut().zip(z.chunks_mut(per).zip(eps_hat.chunks(per))) {
            if t > 1 {
                draw(rng, &mut noise);
            }
            for i in 0..per {
                let x0 = ((zc[i] - (1.0 - ab).sqrt() * ec[i]) / ab.sqrt()).clamp(-1.0, 1.0);
                let mean = c0 * x0 + ct * zc[i];
                zc[i] = if t > 1 { mean + sigma * noise[i] } else { mean };
            }
            if zc.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLatent { step: t });
            }
        }
    }
    z.chunks(per)
        .map(|zc| {
            let unit: Vec<f64> = zc.iter().map(|&x| (x + 1.0) * 0.5).collect();
            let latent = Tensor::new(vec![cfg.frames, lh, lw, cfg.channels], unit)?;
            let mut video = vae_stub_decode(&latent, cfg.pool)?;
            video.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            Ok(video)
        })
        .collect()
}
