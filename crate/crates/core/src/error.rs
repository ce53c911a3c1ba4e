use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty polyline")]
    EmptyPolyline,
    #[error("zero frames")]
    ZeroFrames,
    #[error("trajectory too short: need at least 2 frames, got {0}")]
    TrajectoryTooShort(usize),
    #[error("cannot place bodies: object {object} still overlaps after {attempts} attempts")]
    CannotPlace { object: usize, attempts: usize },
    #[error("invalid spacing: {spacing} is less than domino thickness {thickness}")]
    InvalidSpacing { spacing: f64, thickness: f64 },
    #[error("undetectable object {0}: no visible frame")]
    UndetectableObject(u32),
    #[error("detection record #{index} (object {object_id}, frame {frame}) is outside 0..{frame_count}")]
    FrameOutOfRange {
        index: usize,
        object_id: u32,
        frame: i64,
        frame_count: usize,
    },
    #[error("missing palette entry for object {0}")]
    MissingPalette(u32),
    #[error("NaN cost at ({row}, {col})")]
    NanCost { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
