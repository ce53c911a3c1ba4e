use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: incompatible shapes {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("backward already ran on this graph; zero the gradients first")]
    BackwardTwice,
    #[error("timestep {t} outside [{min}, {max}]")]
    StepOutOfRange { t: usize, min: usize, max: usize },
    #[error("divergence at step {step}: loss is {loss}")]
    Divergence { step: usize, loss: f64 },
    #[error("non-finite latent at sampling step {step}")]
    NonFiniteLatent { step: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("missing parameter {0:?}")]
    MissingParam(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] trajdiff_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
