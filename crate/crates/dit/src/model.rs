use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use trajdiff_core::seed;

use crate::config::{ConditionMode, DitConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::tensor::{Scalar, Tensor};

/// Named model parameters in a fixed (sorted) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params<T> {
    pub tensors: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> Params<T> {
    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::MissingParam(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Params<U> {
        Params {
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().all(Tensor::is_finite)
    }
}

enum Init {
    Normal(usize),
    Zeros,
    Ones,
}

fn attention_specs(prefix: &str, l: usize, out: &mut Vec<(String, Vec<usize>, Init)>) {
    out.push((format!("{prefix}.norm_g"), vec![l], Init::Ones));
    out.push((format!("{prefix}.norm_b"), vec![l], Init::Zeros));
    for m in ["q", "k", "v", "o"] {
        out.push((format!("{prefix}.w{m}"), vec![l, l], Init::Normal(l)));
        out.push((format!("{prefix}.b{m}"), vec![l], Init::Zeros));
    }
}

fn branch_specs(prefix: &str, patch_len: usize, l: usize, out: &mut Vec<(String, Vec<usize>, Init)>) {
    out.push((format!("{prefix}.patch_w"), vec![patch_len, l], Init::Normal(patch_len)));
    out.push((format!("{prefix}.patch_b"), vec![l], Init::Zeros));
    out.push((format!("{prefix}.w1"), vec![l, l], Init::Normal(l)));
    out.push((format!("{prefix}.b1"), vec![l], Init::Zeros));
    out.push((format!("{prefix}.w2"), vec![l, l], Init::Normal(l)));
    out.push((format!("{prefix}.b2"), vec![l], Init::Zeros));
}

fn param_specs(cfg: &DitConfig) -> Vec<(String, Vec<usize>, Init)> {
    let (l, pl) = (cfg.dim, cfg.patch_len());
    let hidden = cfg.mlp_ratio * l;
    let mut s = vec![
        ("patch.w".to_string(), vec![pl, l], Init::Normal(pl)),
        ("patch.b".to_string(), vec![l], Init::Zeros),
        ("time.w".to_string(), vec![l, l], Init::Normal(l)),
        ("time.b".to_string(), vec![l], Init::Zeros),
        // zero output layer: the untrained model predicts zero noise
        ("out.w".to_string(), vec![l, pl], Init::Zeros),
        ("out.b".to_string(), vec![pl], Init::Zeros),
    ];
    for i in 0..cfg.blocks {
        attention_specs(&format!("blocks.{i}.spatial"), l, &mut s);
        attention_specs(&format!("blocks.{i}.temporal"), l, &mut s);
        let p = format!("blocks.{i}.mlp");
        s.push((format!("{p}.norm_g"), vec![l], Init::Ones));
        s.push((format!("{p}.norm_b"), vec![l], Init::Zeros));
        s.push((format!("{p}.w1"), vec![l, hidden], Init::Normal(l)));
        s.push((format!("{p}.b1"), vec![hidden], Init::Zeros));
        s.push((format!("{p}.w2"), vec![hidden, l], Init::Normal(hidden)));
        s.push((format!("{p}.b2"), vec![l], Init::Zeros));
    }
    if cfg.cond.uses_pose() {
        branch_specs("enc.pose", pl, l, &mut s);
        s.push(("enc.fuse.w1".to_string(), vec![2 * l, l], Init::Normal(2 * l)));
        s.push(("enc.fuse.b1".to_string(), vec![l], Init::Zeros));
        s.push(("enc.fuse.w2".to_string(), vec![l, l], Init::Normal(l)));
        s.push(("enc.fuse.b2".to_string(), vec![l], Init::Zeros));
    }
    if cfg.cond.uses_id() {
        branch_specs("enc.id", pl, l, &mut s);
    }
    s
}

/// Seeded initialization. Each tensor draws from its own stream keyed by
/// name, so adding parameters never changes the others.
pub fn init_params<T: Scalar>(cfg: &DitConfig) -> Result<Params<T>> {
    cfg.validate()?;
    let mut tensors = BTreeMap::new();
    for (name, shape, init) in param_specs(cfg) {
        let n: usize = shape.iter().product();
        let data: Vec<T> = match init {
            Init::Zeros => vec![T::zero(); n],
            Init::Ones => vec![T::one(); n],
            Init::Normal(fan_in) => {
                let mut rng = seed::stream(cfg.seed, &format!("init/{name}"), 0);
                let std = 1.0 / (fan_in as f64).sqrt();
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        T::of(z * std)
                    })
                    .collect()
            }
        };
        tensors.insert(name, Tensor::new(shape, data)?);
    }
    Ok(Params { tensors })
}

/// Parameters placed on a graph.
#[derive(Debug, Clone)]
pub struct Bound {
    pub vars: BTreeMap<String, Var>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingParam(name.to_string()))
    }
}

/// Adds every parameter to `g`, as trainable leaves or as constants.
pub fn bind<T: Scalar>(g: &mut Graph<T>, params: &Params<T>, trainable: bool) -> Bound {
    let vars = params
        .tensors
        .iter()
        .map(|(k, v)| {
            let var = if trainable {
                g.param(v.clone())
            } else {
                g.constant(v.clone())
            };
            (k.clone(), var)
        })
        .collect();
    Bound { vars }
}

fn linear<T: Scalar>(g: &mut Graph<T>, p: &Bound, x: Var, w: &str, b: &str) -> Result<Var> {
    let y = g.matmul(x, p.var(w)?)?;
    g.add(y, p.var(b)?)
}

fn dims5(g: &Graph<impl Scalar>, v: Var, op: &'static str) -> Result<[usize; 5]> {
    g.shape(v)
        .try_into()
        .map_err(|_| Error::shape(op, format!("expected rank 5, got {:?}", g.shape(v))))
}

/// Cuts `B x N x H' x W' x C` latents into non-overlapping `k x k` patches and
/// projects each to `L`: reshape, axis permutation, then one matmul.
/// Returns `B x N x (H'W'/k^2) x L`.
pub fn patchify<T: Scalar>(g: &mut Graph<T>, latent: Var, k: usize, w: Var, b: Var) -> Result<Var> {
    let [bs, n, h, wd, c] = dims5(g, latent, "patchify")?;
    if k == 0 || h % k != 0 || wd % k != 0 {
        return Err(Error::shape("patchify", format!("{h}x{wd} latent with patch {k}")));
    }
    let x = g.reshape(latent, &[bs, n, h / k, k, wd / k, k, c])?;
    let x = g.permute(x, &[0, 1, 2, 4, 3, 5, 6])?;
    let x = g.reshape(x, &[bs, n, (h / k) * (wd / k), k * k * c])?;
    let y = g.matmul(x, w)?;
    g.add(y, b)
}

/// Inverse layout of [`patchify`] after projecting tokens to `k*k*C`.
pub fn unpatchify<T: Scalar>(g: &mut Graph<T>, tokens: Var, cfg: &DitConfig, w: Var, b: Var) -> Result<Var> {
    let shape = g.shape(tokens).to_vec();
    let (bs, n) = (shape[0], shape[1]);
    let (lh, lw) = cfg.latent_dims();
    let k = cfg.patch;
    let y = g.matmul(tokens, w)?;
    let y = g.add(y, b)?;
    let y = g.reshape(y, &[bs, n, lh / k, lw / k, k, k, cfg.channels])?;
    let y = g.permute(y, &[0, 1, 2, 4, 3, 5, 6])?;
    g.reshape(y, &[bs, n, lh, lw, cfg.channels])
}

fn dims4(g: &Graph<impl Scalar>, v: Var) -> Result<[usize; 4]> {
    g.shape(v)
        .try_into()
        .map_err(|_| Error::shape("tokens", format!("expected rank 4, got {:?}", g.shape(v))))
}

/// `B x N x S x L` tokens viewed as `B*N` sequences of length `S`.
pub fn spatial_reshape<T: Scalar>(g: &mut Graph<T>, tokens: Var) -> Result<Var> {
    let [b, n, s, l] = dims4(g, tokens)?;
    g.reshape(tokens, &[b * n, s, l])
}

pub fn spatial_unreshape<T: Scalar>(g: &mut Graph<T>, seqs: Var, b: usize, n: usize) -> Result<Var> {
    let sh = g.shape(seqs).to_vec();
    g.reshape(seqs, &[b, n, sh[1], sh[2]])
}

/// `B x N x S x L` tokens viewed as `B*S` sequences of length `N`.
pub fn temporal_reshape<T: Scalar>(g: &mut Graph<T>, tokens: Var) -> Result<Var> {
    let [b, n, s, l] = dims4(g, tokens)?;
    let x = g.permute(tokens, &[0, 2, 1, 3])?;
    g.reshape(x, &[b * s, n, l])
}

pub fn temporal_unreshape<T: Scalar>(g: &mut Graph<T>, seqs: Var, b: usize, s: usize) -> Result<Var> {
    let sh = g.shape(seqs).to_vec();
    let x = g.reshape(seqs, &[b, s, sh[1], sh[2]])?;
    g.permute(x, &[0, 2, 1, 3])
}

/// Multi-head self-attention over `Bt x Seq x L` sequences. Returns the
/// output and the `Bt x heads x Seq x Seq` attention weights.
pub fn self_attention<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound,
    prefix: &str,
    heads: usize,
    x: Var,
) -> Result<(Var, Var)> {
    let sh = g.shape(x).to_vec();
    let (bt, seq, l) = (sh[0], sh[1], sh[2]);
    if heads == 0 || l % heads != 0 {
        return Err(Error::shape("attention", format!("width {l} with {heads} heads")));
    }
    let dh = l / heads;
    let project = |g: &mut Graph<T>, m: &str, axes: &[usize]| -> Result<Var> {
        let y = linear(g, p, x, &format!("{prefix}.w{m}"), &format!("{prefix}.b{m}"))?;
        let y = g.reshape(y, &[bt, seq, heads, dh])?;
        g.permute(y, axes)
    };
    let q = project(g, "q", &[0, 2, 1, 3])?;
    let kt = project(g, "k", &[0, 2, 3, 1])?;
    let v = project(g, "v", &[0, 2, 1, 3])?;
    let scores = g.matmul(q, kt)?;
    let scores = g.scale(scores, 1.0 / (dh as f64).sqrt());
    let attn = g.softmax(scores)?;
    let o = g.matmul(attn, v)?;
    let o = g.permute(o, &[0, 2, 1, 3])?;
    let o = g.reshape(o, &[bt, seq, l])?;
    let out = linear(g, p, o, &format!("{prefix}.wo"), &format!("{prefix}.bo"))?;
    Ok((out, attn))
}

fn prenorm<T: Scalar>(g: &mut Graph<T>, p: &Bound, prefix: &str, x: Var) -> Result<Var> {
    g.layer_norm(
        x,
        p.var(&format!("{prefix}.norm_g"))?,
        p.var(&format!("{prefix}.norm_b"))?,
    )
}

/// `x + SpatialAttention(LN(x))`; attention stays within each frame.
pub fn spatial_block<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound,
    cfg: &DitConfig,
    block: usize,
    x: Var,
) -> Result<(Var, Var)> {
    let [b, n, _, _] = dims4(g, x)?;
    let prefix = format!("blocks.{block}.spatial");
    let h = prenorm(g, p, &prefix, x)?;
    let h = spatial_reshape(g, h)?;
    let (h, attn) = self_attention(g, p, &prefix, cfg.heads, h)?;
    let h = spatial_unreshape(g, h, b, n)?;
    Ok((g.add(x, h)?, attn))
}

/// `x + TemporalAttention(LN(x))`; attention stays within each spatial position.
pub fn temporal_block<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound,
    cfg: &DitConfig,
    block: usize,
    x: Var,
) -> Result<(Var, Var)> {
    let [b, _, s, _] = dims4(g, x)?;
    let prefix = format!("blocks.{block}.temporal");
    let h = prenorm(g, p, &prefix, x)?;
    let h = temporal_reshape(g, h)?;
    let (h, attn) = self_attention(g, p, &prefix, cfg.heads, h)?;
    let h = temporal_unreshape(g, h, b, s)?;
    Ok((g.add(x, h)?, attn))
}

/// `x + MLP(LN(x))`.
pub fn mlp_block<T: Scalar>(g: &mut Graph<T>, p: &Bound, block: usize, x: Var) -> Result<Var> {
    let prefix = format!("blocks.{block}.mlp");
    let h = prenorm(g, p, &prefix, x)?;
    let h = linear(g, p, h, &format!("{prefix}.w1"), &format!("{prefix}.b1"))?;
    let h = g.gelu(h);
    let h = linear(g, p, h, &format!("{prefix}.w2"), &format!("{prefix}.b2"))?;
    g.add(x, h)
}

/// Sinusoidal embedding of integer timesteps, `len(ts) x dim`.
pub fn timestep_embedding<T: Scalar>(ts: &[usize], dim: usize) -> Tensor<T> {
    let half = dim / 2;
    let mut data = vec![T::zero(); ts.len() * dim];
    for (r, &t) in ts.iter().enumerate() {
        for i in 0..half {
            let freq = (-(10_000f64.ln()) * i as f64 / half as f64).exp();
            let a = t as f64 * freq;
            data[r * dim + i] = T::of(a.sin());
            data[r * dim + half + i] = T::of(a.cos());
        }
    }
    Tensor {
        shape: vec![ts.len(), dim],
        data,
    }
}

fn branch<T: Scalar>(g: &mut Graph<T>, p: &Bound, cfg: &DitConfig, prefix: &str, latent: Var) -> Result<Var> {
    let x = patchify(
        g,
        latent,
        cfg.patch,
        p.var(&format!("{prefix}.patch_w"))?,
        p.var(&format!("{prefix}.patch_b"))?,
    )?;
    let h = linear(g, p, x, &format!("{prefix}.w1"), &format!("{prefix}.b1"))?;
    let h = g.gelu(h);
    linear(g, p, h, &format!("{prefix}.w2"), &format!("{prefix}.b2"))
}

/// Condition tokens from the pose latent and (when the mode uses it) the ID
/// latent: one patchify + two-layer perceptron per modality, then a two-layer
/// fusion perceptron on their concatenation. Without an ID branch its half of
/// the fusion input is zero.
pub fn interaction_encoder<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound,
    cfg: &DitConfig,
    pose: Var,
    id: Option<Var>,
) -> Result<Var> {
    if !cfg.cond.uses_pose() {
        return Err(Error::Config("unconditioned model has no interaction encoder".into()));
    }
    if let Some(id) = id {
        if g.shape(id) != g.shape(pose) {
            return Err(Error::shape(
                "interaction_encoder",
                format!("pose {:?} vs id {:?}", g.shape(pose), g.shape(id)),
            ));
        }
    }
    let pose_feat = branch(g, p, cfg, "enc.pose", pose)?;
    let id_feat = match (cfg.cond.uses_id(), id) {
        (true, Some(id)) => branch(g, p, cfg, "enc.id", id)?,
        (true, None) => return Err(Error::Config("model expects an object-id stack".into())),
        (false, _) => {
            let shape = g.shape(pose_feat).to_vec();
            g.constant(Tensor::zeros(&shape))
        }
    };
    let x = g.concat_last(pose_feat, id_feat)?;
    let h = linear(g, p, x, "enc.fuse.w1", "enc.fuse.b1")?;
    let h = g.gelu(h);
    linear(g, p, h, "enc.fuse.w2", "enc.fuse.b2")
}

/// Nodes of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Predicted noise, `B x N x H' x W' x C`.
    pub prediction: Var,
    /// Tokens entering the first block.
    pub tokens: Var,
    /// Attention weights of every spatial and temporal layer, in order.
    pub attention: Vec<Var>,
}

/// Noise prediction for noisy latents `B x N x H' x W' x C` at steps `ts`
/// (one per batch element, each in `1..=T`), with optional condition tokens
/// added after patchify.
pub fn dit_forward<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound,
    cfg: &DitConfig,
    noisy: Var,
    ts: &[usize],
    cond: Option<Var>,
) -> Result<Forward> {
    let [b, _, _, _, _] = dims5(g, noisy, "dit_forward")?;
    if ts.len() != b {
        return Err(Error::shape(
            "dit_forward",
            format!("{} timesteps for batch {b}", ts.len()),
        ));
    }
    if let Some(&t) = ts.iter().find(|&&t| t == 0 || t > cfg.steps) {
        return Err(Error::StepOutOfRange {
            t,
            min: 1,
            max: cfg.steps,
        });
    }
    let x = patchify(g, noisy, cfg.patch, p.var("patch.w")?, p.var("patch.b")?)?;
    let emb = g.constant(timestep_embedding(ts, cfg.dim));
    let emb = linear(g, p, emb, "time.w", "time.b")?;
    let emb = g.reshape(emb, &[b, 1, 1, cfg.dim])?;
    let mut x = g.add(x, emb)?;
    if let Some(c) = cond {
        if g.shape(c) != g.shape(x) {
            return Err(Error::shape(
                "dit_forward",
                format!("condition {:?} vs tokens {:?}", g.shape(c), g.shape(x)),
            ));
        }
        x = g.add(x, c)?;
    }
    let tokens = x;
    let mut attention = Vec::with_capacity(2 * cfg.blocks);
    for i in 0..cfg.blocks {
        let (y, a) = spatial_block(g, p, cfg, i, x)?;
        attention.push(a);
        let (y, a) = temporal_block(g, p, cfg, i, y)?;
        attention.push(a);
        x = mlp_block(g, p, i, y)?;
    }
    let prediction = unpatchify(g, x, cfg, p.var("out.w")?, p.var("out.b")?)?;
    Ok(Forward {
        prediction,
        tokens,
        attention,
    })
}

/// Condition latents for a batch: pose is required by conditioned modes, id
/// by the sparse-pose + id mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CondLatents<T> {
    pub pose: Tensor<T>,
    pub id: Option<Tensor<T>>,
}

/// Builds condition tokens for `cfg.cond` from batched latents, or `None` for
/// unconditioned models.
pub fn condition_tokens<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound,
    cfg: &DitConfig,
    cond: Option<&CondLatents<T>>,
) -> Result<Option<Var>> {
    match (cfg.cond, cond) {
        (ConditionMode::None, _) => Ok(None),
        (_, None) => Err(Error::Config(format!("{} model needs condition stacks", cfg.cond))),
        (mode, Some(c)) => {
            let pose = g.constant(c.pose.clone());
            let id = match (&c.id, mode.uses_id()) {
                (Some(t), true) => Some(g.constant(t.clone())),
                _ => None,
            };
            interaction_encoder(g, p, cfg, pose, id).map(Some)
        }
    }
}
