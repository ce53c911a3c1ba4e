use std::collections::BTreeMap;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use trajdiff_core::seed;

use crate::config::DitConfig;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{bind, condition_tokens, dit_forward, init_params, CondLatents, Params};
use crate::schedule::{add_noise, NoiseSchedule};
use crate::tensor::{Scalar, Tensor};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// One training video: latent scaled to `[-1, 1]` (`N x H' x W' x C`) and
/// its condition latents.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub latent: Tensor<T>,
    pub cond: Option<CondLatents<T>>,
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub step: u64,
    m: BTreeMap<String, Vec<T>>,
    v: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn update(&mut self, params: &mut Params<T>, grads: &BTreeMap<String, Tensor<T>>) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        let (b1, b2) = (T::of(ADAM_BETA1), T::of(ADAM_BETA2));
        let step_size = T::of(self.learning_rate / c1);
        let inv_c2 = T::of(1.0 / c2);
        let eps = T::of(ADAM_EPS);
        for (name, p) in params.tensors.iter_mut() {
            let Some(g) = grads.get(name) else { continue };
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![T::zero(); p.len()]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![T::zero(); p.len()]);
            for i in 0..p.len() {
                let gi = g.data[i];
                m[i] = b1 * m[i] + (T::one() - b1) * gi;
                v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
                p.data[i] = p.data[i] - step_size * m[i] / ((v[i] * inv_c2).sqrt() + eps);
            }
        }
    }
}

fn stack<T: Scalar>(items: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = items.first().ok_or_else(|| Error::shape("batch", "empty batch"))?;
    if items.iter().any(|t| t.shape != first.shape) {
        return Err(Error::shape("batch", "examples differ in shape"));
    }
    let mut shape = vec![items.len()];
    shape.extend(&first.shape);
    let data = items.iter().flat_map(|t| t.data.iter().copied()).collect();
    Tensor::new(shape, data)
}

/// Stacks per-example condition latents into a batch.
pub fn stack_cond<T: Scalar>(conds: &[&CondLatents<T>]) -> Result<CondLatents<T>> {
    let pose = stack(&conds.iter().map(|c| &c.pose).collect::<Vec<_>>())?;
    let id = if conds.iter().all(|c| c.id.is_some()) {
        Some(stack(
            &conds.iter().map(|c| c.id.as_ref().unwrap()).collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(CondLatents { pose, id })
}

fn normal<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::of(z)
        })
        .collect()
}

/// Loss and gradients of the noise-prediction objective on one batch with
/// the given steps and noise.
pub fn loss_and_grads<T: Scalar>(
    params: &Params<T>,
    cfg: &DitConfig,
    sched: &NoiseSchedule,
    batch: &[&Example<T>],
    ts: &[usize],
    noise: &[Tensor<T>],
) -> Result<(f64, BTreeMap<String, Tensor<T>>)> {
    let noisy = batch
        .iter()
        .zip(ts)
        .zip(noise)
        .map(|((ex, &t), eps)| add_noise(&ex.latent, t, eps, sched))
        .collect::<Result<Vec<_>>>()?;
    let noisy = stack(&noisy.iter().collect::<Vec<_>>())?;
    let target = stack(&noise.iter().collect::<Vec<_>>())?;
    let cond = if cfg.cond.uses_pose() {
        let conds = batch
            .iter()
            .map(|ex| {
                ex.cond
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("{} model needs condition stacks", cfg.cond)))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(stack_cond(&conds)?)
    } else {
        None
    };

    let mut g = Graph::new();
    let p = bind(&mut g, params, true);
    let z = g.constant(noisy);
    let c = condition_tokens(&mut g, &p, cfg, cond.as_ref())?;
    let f = dit_forward(&mut g, &p, cfg, z, ts, c)?;
    let target = g.constant(target);
    let loss = g.mse(f.prediction, target)?;
    g.backward(loss)?;
    let grads = p.vars.iter().map(|(k, &v)| (k.clone(), g.grad(v))).collect();
    Ok((g.value(loss).data[0].as_f64(), grads))
}

/// Parameters, optimizer state and the training random stream.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub cfg: DitConfig,
    pub params: Params<T>,
    pub sched: NoiseSchedule,
    pub optimizer: Adam<T>,
    pub steps_done: usize,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(cfg: &DitConfig) -> Result<Self> {
        let params = init_params(cfg)?;
        Self::with_params(cfg, params)
    }

    pub fn with_params(cfg: &DitConfig, params: Params<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            params,
            sched: NoiseSchedule::linear(cfg.steps)?,
            optimizer: Adam::new(cfg.learning_rate),
            steps_done: 0,
            rng: seed::stream(cfg.seed, "train", 0),
        })
    }

    /// Draws steps uniformly from `1..=T` and unit Gaussian noise, then
    /// takes one Adam step on the mean squared noise-prediction error.
    pub fn training_step(&mut self, batch: &[&Example<T>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::shape("training_step", "empty batch"));
        }
        let ts: Vec<usize> = batch
            .iter()
            .map(|_| self.rng.random_range(1..=self.cfg.steps))
            .collect();
        let noise: Vec<Tensor<T>> = batch
            .iter()
            .map(|ex| Tensor {
                shape: ex.latent.shape.clone(),
                data: normal(&mut self.rng, ex.latent.len()),
            })
            .collect();
        let (loss, grads) = loss_and_grads(&self.params, &self.cfg, &self.sched, batch, &ts, &noise)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                step: self.steps_done,
                loss,
            });
        }
        self.optimizer.update(&mut self.params, &grads);
        self.steps_done += 1;
        Ok(loss)
    }

    /// Runs `steps` training steps on batches drawn with replacement from
    /// `data`, returning the loss of each step.
    pub fn fit(&mut self, data: &[Example<T>], steps: usize, mut on_step: impl FnMut(usize, f64)) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::shape("fit", "no training examples"));
        }
        let mut losses = Vec::with_capacity(steps);
        for _ in 0..steps {
            let picks: Vec<&Example<T>> = (0..self.cfg.batch_size)
                .map(|_| &data[self.rng.random_range(0..data.len())])
                .collect();
            let loss = self.training_step(&picks)?;
            on_step(self.steps_done, loss);
            losses.push(loss);
        }
        Ok(losses)
    }
}
