//! Text-line extraction and character recognition for scripts that hang
//! their characters from a headline (Matra), as in Bangla.
//!
//! A line goes through an absolute-gradient edge map, word splitting on
//! blank columns, per-word Otsu binarization, headline and baseline
//! detection, straight and piecewise character segmentation, and a
//! two-stage recognizer (discriminant planes, then a feature tree with
//! run-length template matching). [`synth`] produces lines with exact
//! ground truth for evaluation.

pub mod binarize;
pub mod classify;
pub mod components;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod line;
pub mod pipeline;
pub mod segment;
pub mod synth;

pub use classify::{
    extract_features, group_character, recognize_character, train_model, DiscriminantPlanes,
    FeatureVector, GlyphTemplate, Group, Recognition, RecognitionModel, TrainConfig, TrainingSample,
};
pub use error::{Error, Result};
pub use eval::{evaluate, Metrics};
pub use imaging::{decode_image, BinaryImage, GrayImage, Raster, Rect, Span};
pub use line::{LineStructure, Zones};
pub use pipeline::{run_batch, run_pipeline, PipelineConfig, TranscriptionResult};
pub use synth::{GroundTruth, SynthSpec};
