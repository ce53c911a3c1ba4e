use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

const BETA_START: f64 = 1e-4;
const BETA_END: f64 = 0.02;
/// Step count the linear beta range is quoted for; shorter schedules scale
/// their betas up by `REFERENCE_STEPS / T` so the chain still ends near pure noise.
pub const REFERENCE_STEPS: usize = 1000;

/// Variance-preserving noise schedule over steps `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub steps: usize,
    /// `betas[t]` for `t` in `1..=T`; `betas[0]` is 0.
    pub betas: Vec<f64>,
    /// Cumulative products; `alpha_bar[0] == 1`.
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// Linear betas from `1e-4` to `0.02`, rescaled by `1000 / T`.
    pub fn linear(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("diffusion steps must be positive".into()));
        }
        let scale = REFERENCE_STEPS as f64 / steps as f64;
        let (lo, hi) = (BETA_START * scale, (BETA_END * scale).min(0.9999));
        let betas: Vec<f64> = (1..=steps)
            .map(|t| {
                if steps == 1 {
                    hi
                } else {
                    lo + (hi - lo) * (t - 1) as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Self::from_betas(&betas)
    }

    /// Schedule from explicit betas for steps `1..=T`, each in `(0, 1)`.
    pub fn from_betas(betas: &[f64]) -> Result<Self> {
        if betas.is_empty() || betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::Config("betas must lie in (0, 1)".into()));
        }
        let mut alpha_bar = Vec::with_capacity(betas.len() + 1);
        alpha_bar.push(1.0);
        let mut acc = 1.0;
        for &b in betas {
            acc *= 1.0 - b;
            alpha_bar.push(acc);
        }
        let mut all = vec![0.0];
        all.extend_from_slice(betas);
        Ok(Self {
            steps: betas.len(),
            betas: all,
            alpha_bar,
        })
    }

    pub fn check_step(&self, t: usize, min: usize) -> Result<()> {
        if t < min || t > self.steps {
            return Err(Error::StepOutOfRange {
                t,
                min,
                max: self.steps,
            });
        }
        Ok(())
    }
}

/// `sqrt(abar_t) z + sqrt(1 - abar_t) eps`; returns `z` unchanged at `t = 0`.
pub fn add_noise<T: Scalar>(z: &Tensor<T>, t: usize, eps: &Tensor<T>, sched: &NoiseSchedule) -> Result<Tensor<T>> {
    sched.check_step(t, 0)?;
    if z.shape != eps.shape {
        return Err(Error::shape(
            "add_noise",
            format!("{:?} vs noise {:?}", z.shape, eps.shape),
        ));
    }
    if t == 0 {
        return Ok(z.clone());
    }
    let ab = sched.alpha_bar[t];
    let (a, b) = (T::of(ab.sqrt()), T::of((1.0 - ab).sqrt()));
    Ok(Tensor {
        shape: z.shape.clone(),
        data: z.data.iter().zip(&eps.data).map(|(&x, &e)| a * x + b * e).collect(),
    })
}
