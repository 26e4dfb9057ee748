use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed image data: {0}")]
    Decode(String),
    #[error("unsupported image format (expected PNG or binary PGM)")]
    UnsupportedFormat,
    #[error("rectangle {rect:?} exceeds image bounds {width}x{height}")]
    OutOfBounds {
        rect: crate::imaging::Rect,
        width: usize,
        height: usize,
    },
    #[error("image too small: {0}")]
    TooSmall(&'static str),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("region has a single intensity; no threshold exists")]
    Degenerate,
    #[error("line has no foreground pixels")]
    EmptyLine,
    #[error("invalid line structure: {0}")]
    InvalidStructure(String),
    #[error("word rectangles overlap in columns")]
    Overlap,
    #[error("character image has no foreground pixels")]
    BlankCharacter,
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("length mismatch: {0} results vs {1} ground truths")]
    LengthMismatch(usize, usize),
    #[error("invalid synthesis parameters: {0}")]
    InvalidSpec(String),
    #[error("model format: {0}")]
    Model(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
