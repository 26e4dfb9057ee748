//! Shared inputs for the criterion benchmarks in `benches/`.

use matra_core::pipeline::train_from_lines;
use matra_core::synth::generate_corpus;
use matra_core::{GrayImage, PipelineConfig, RecognitionModel, Result, SynthSpec, TrainConfig};

pub struct Fixture {
    pub cfg: PipelineConfig,
    pub images: Vec<GrayImage>,
    pub model: RecognitionModel,
}

/// `lines` synthetic lines from the default generator, and a model trained
/// on the first half of them.
pub fn fixture(lines: usize) -> Result<Fixture> {
    let cfg = PipelineConfig::default();
    let corpus = generate_corpus(&SynthSpec::default(), lines.max(2))?;
    let model = train_from_lines(&corpus[..corpus.len() / 2], &cfg, &TrainConfig::default())?;
    let images = corpus.into_iter().map(|(img, _)| img).collect();
    Ok(Fixture { cfg, images, model })
}
