use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which conditioning branches feed the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionMode {
    None,
    SparsePose,
    SparsePoseAndId,
}

impl ConditionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionMode::None => "none",
            ConditionMode::SparsePose => "sparse",
            ConditionMode::SparsePoseAndId => "sparse_id",
        }
    }

    pub fn uses_pose(&self) -> bool {
        !matches!(self, ConditionMode::None)
    }

    pub fn uses_id(&self) -> bool {
        matches!(self, ConditionMode::SparsePoseAndId)
    }
}

impl fmt::Display for ConditionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ConditionMode::None),
            "sparse" => Ok(ConditionMode::SparsePose),
            "sparse_id" => Ok(ConditionMode::SparsePoseAndId),
            other => Err(Error::Config(format!(
                "unknown condition mode {other:?} (none, sparse, sparse_id)"
            ))),
        }
    }
}

/// Model, data and optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DitConfig {
    /// Video frames; the latent keeps all of them.
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Stub VAE pooling factor.
    pub pool: usize,
    /// Patch size `k`.
    pub patch: usize,
    /// Embedding width `L`.
    pub dim: usize,
    pub blocks: usize,
    pub heads: usize,
    pub mlp_ratio: usize,
    /// Diffusion steps `T`.
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_steps: usize,
    pub cond: ConditionMode,
    /// Speed mapped to full saturation in the sparse-pose stack; 0 picks the
    /// 99th percentile of each trajectory set.
    pub pose_v_max: f64,
    /// Sparse-pose disc radius in pixels; 0 picks the default for the frame size.
    pub pose_radius: f64,
    pub pose_sigma: f64,
    /// Object-id disc radius in pixels; 0 reuses the pose radius.
    pub id_radius: f64,
    pub seed: u64,
}

impl Default for DitConfig {
    fn default() -> Self {
        Self {
            frames: 16,
            height: 32,
            width: 32,
            channels: 3,
            pool: 2,
            patch: 2,
            dim: 64,
            blocks: 4,
            heads: 4,
            mlp_ratio: 4,
            steps: 200,
            learning_rate: 1e-3,
            batch_size: 4,
            train_steps: 500,
            cond: ConditionMode::SparsePoseAndId,
            pose_v_max: 0.0,
            pose_radius: 0.0,
            pose_sigma: 2.0,
            id_radius: 0.0,
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "frames",
    "height",
    "width",
    "channels",
    "pool",
    "patch",
    "dim",
    "blocks",
    "heads",
    "mlp_ratio",
    "steps",
    "learning_rate",
    "batch_size",
    "train_steps",
    "cond",
    "pose_v_max",
    "pose_radius",
    "pose_sigma",
    "id_radius",
    "seed",
];

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl DitConfig {
    pub fn latent_dims(&self) -> (usize, usize) {
        (self.height / self.pool.max(1), self.width / self.pool.max(1))
    }

    /// Spatial tokens per frame.
    pub fn tokens_per_frame(&self) -> usize {
        let (lh, lw) = self.latent_dims();
        (lh / self.patch.max(1)) * (lw / self.patch.max(1))
    }

    pub fn patch_len(&self) -> usize {
        self.patch * self.patch * self.channels
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frames", self.frames),
            ("height", self.height),
            ("width", self.width),
            ("channels", self.channels),
            ("pool", self.pool),
            ("patch", self.patch),
            ("dim", self.dim),
            ("blocks", self.blocks),
            ("heads", self.heads),
            ("mlp_ratio", self.mlp_ratio),
            ("steps", self.steps),
            ("batch_size", self.batch_size),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{k} must be positive")));
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "dim {} not divisible by heads {}",
                self.dim, self.heads
            )));
        }
        if !self.height.is_multiple_of(self.pool) || !self.width.is_multiple_of(self.pool) {
            return Err(Error::Config(format!(
                "{}x{} frames not divisible by pool {}",
                self.height, self.width, self.pool
            )));
        }
        let (lh, lw) = self.latent_dims();
        if lh % self.patch != 0 || lw % self.patch != 0 {
            return Err(Error::Config(format!(
                "{lh}x{lw} latent not divisible by patch {}",
                self.patch
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        let lengths = [
            ("pose_v_max", self.pose_v_max),
            ("pose_radius", self.pose_radius),
            ("pose_sigma", self.pose_sigma),
            ("id_radius", self.id_radius),
        ];
        if let Some((k, v)) = lengths.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("{k} must be finite and non-negative, got {v}")));
        }
        Ok(())
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "frames" => self.frames = parse(key, value)?,
            "height" => self.height = parse(key, value)?,
            "width" => self.width = parse(key, value)?,
            "channels" => self.channels = parse(key, value)?,
            "pool" => self.pool = parse(key, value)?,
            "patch" => self.patch = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "blocks" => self.blocks = parse(key, value)?,
            "heads" => self.heads = parse(key, value)?,
            "mlp_ratio" => self.mlp_ratio = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "train_steps" => self.train_steps = parse(key, value)?,
            "cond" => self.cond = value.parse()?,
            "pose_v_max" => self.pose_v_max = parse(key, value)?,
            "pose_radius" => self.pose_radius = parse(key, value)?,
            "pose_sigma" => self.pose_sigma = parse(key, value)?,
            "id_radius" => self.id_radius = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "frames" => self.frames.to_string(),
            "height" => self.height.to_string(),
            "width" => self.width.to_string(),
            "channels" => self.channels.to_string(),
            "pool" => self.pool.to_string(),
            "patch" => self.patch.to_string(),
            "dim" => self.dim.to_string(),
            "blocks" => self.blocks.to_string(),
            "heads" => self.heads.to_string(),
            "mlp_ratio" => self.mlp_ratio.to_string(),
            "steps" => self.steps.to_string(),
            "learning_rate" => format!("{:?}", self.learning_rate),
            "batch_size" => self.batch_size.to_string(),
            "train_steps" => self.train_steps.to_string(),
            "cond" => self.cond.to_string(),
            "pose_v_max" => format!("{:?}", self.pose_v_max),
            "pose_radius" => format!("{:?}", self.pose_radius),
            "pose_sigma" => format!("{:?}", self.pose_sigma),
            "id_radius" => format!("{:?}", self.id_radius),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    /// Applies every entry of a flat map; unknown keys are errors.
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_flat(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(&parse_flat(text)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_flat(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap()))
            .collect()
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// a repeated key keeps its last value.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}
