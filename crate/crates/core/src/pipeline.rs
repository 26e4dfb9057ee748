//! End-to-end line processing: edges, words, binarization, line structure,
//! characters and recognition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::{binarize_word, edge_map};
use crate::classify::model::{recognize_character, DEFAULT_WIDTH_TOL};
use crate::classify::{train_model, Group, RecognitionModel, TrainConfig, TrainingSample, REJECT};
use crate::components::denoise;
use crate::error::{Error, Result};
use crate::imaging::{encode_png_rgb, BinaryImage, GrayImage, Rect, Span};
use crate::line::{
    detect_baseline, detect_matra, detect_word_gaps, horizontal_projection, reassemble_line,
    split_words, split_zones, vertical_projection, Zones,
};
use crate::segment::extract_characters;
use crate::synth::GroundTruth;

pub const RESULT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Narrowest blank column run in the edge map that separates words.
    pub min_gap_width: usize,
    /// Fraction of the peak row count that still belongs to the headline.
    pub matra_band: f64,
    /// Column deviation bound for kerned-character scan paths.
    pub max_dev: usize,
    /// Narrowest blank column run that separates characters.
    pub min_char_gap: usize,
    /// Relative width window for template candidates.
    pub width_tol: f64,
    /// Column IoU needed for a character box to count as found.
    pub iou: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_gap_width: 2,
            matra_band: 0.85,
            max_dev: 3,
            min_char_gap: 1,
            width_tol: DEFAULT_WIDTH_TOL,
            iou: 0.8,
        }
    }
}

/// Intermediate products of one line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineAnalysis {
    pub edges: BinaryImage,
    pub gaps: Vec<Span>,
    pub binary: BinaryImage,
    /// Word boxes tightened to their ink columns, full line height.
    pub words: Vec<Rect>,
    pub structure: Option<Structure>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub matra: Span,
    pub baseline: usize,
    pub zones: Zones,
    /// `(word index, box in line coordinates)` in reading order.
    pub chars: Vec<(usize, Rect)>,
}

/// Runs every stage up to character boxes. Structural problems (no ink,
/// headline not above the baseline) are reported in `failure`; only
/// images smaller than 2x2 are errors.
pub fn analyze_line(img: &GrayImage, cfg: &PipelineConfig) -> Result<LineAnalysis> {
    let (w, h) = (img.width(), img.height());
    let edges = denoise(&edge_map(img)?);
    let gaps = detect_word_gaps(&vertical_projection(&edges), cfg.min_gap_width);
    let pieces = split_words(img, &gaps)
        .into_iter()
        .map(|r| Ok((r, binarize_word(img, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let binary = reassemble_line(w, h, &pieces)?;

    let words: Vec<Rect> = pieces
        .iter()
        .filter_map(|(r, _)| {
            let ink: Vec<usize> = (r.x0..=r.x1())
                .filter(|&x| (0..h).any(|y| binary.get(x, y)))
                .collect();
            Some(Rect::from_inclusive(*ink.first()?, 0, *ink.last()?, h - 1))
        })
        .collect();

    let mut out = LineAnalysis {
        edges,
        gaps,
        binary,
        words,
        structure: None,
        failure: None,
    };
    match line_structure(&out.binary, &out.words, cfg) {
        Ok(s) => out.structure = Some(s),
        Err(e @ (Error::EmptyLine | Error::InvalidStructure(_))) => out.failure = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn line_structure(binary: &BinaryImage, words: &[Rect], cfg: &PipelineConfig) -> Result<Structure> {
    let matra = detect_matra(&horizontal_projection(binary), cfg.matra_band)?;
    let baseline = detect_baseline(binary, matra)?;
    let zones = split_zones(binary.height(), matra, baseline)?;
    let mut chars = Vec::new();
    for (wi, word) in words.iter().enumerate() {
        let crop = binary.crop(*word)?;
        for cb in extract_characters(&crop, matra, baseline, cfg.min_char_gap, cfg.max_dev) {
            chars.push((wi, Rect::new(word.x0 + cb.rect.x0, cb.rect.y0, cb.rect.w, cb.rect.h)));
        }
    }
    Ok(Structure {
        matra,
        baseline,
        zones,
        chars,
    })
}

/// Full-height column strip of `rect`; rows keep line coordinates.
pub fn character_strip(binary: &BinaryImage, rect: Rect) -> Result<BinaryImage> {
    binary.crop(Rect::new(rect.x0, 0, rect.w, binary.height()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterResult {
    pub word: usize,
    pub rect: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Group>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptionResult {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub failure: Option<String>,
    pub words: Vec<Rect>,
    #[serde(default)]
    pub matra: Option<Span>,
    #[serde(default)]
    pub baseline: Option<usize>,
    pub characters: Vec<CharacterResult>,
}

impl TranscriptionResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if r.version != RESULT_VERSION {
            return Err(Error::Model(format!("unsupported result version {}", r.version)));
        }
        Ok(r)
    }
}

/// Segments and, when a model is given, recognizes one line.
pub fn run_pipeline(
    img: &GrayImage,
    model: Option<&RecognitionModel>,
    cfg: &PipelineConfig,
) -> Result<TranscriptionResult> {
    Ok(transcribe(img, &analyze_line(img, cfg)?, model, cfg))
}

pub fn transcribe(
    img: &GrayImage,
    a: &LineAnalysis,
    model: Option<&RecognitionModel>,
    cfg: &PipelineConfig,
) -> TranscriptionResult {
    let mut result = TranscriptionResult {
        version: RESULT_VERSION,
        width: img.width(),
        height: img.height(),
        failure: a.failure.clone(),
        words: a.words.clone(),
        matra: None,
        baseline: None,
        characters: Vec::new(),
    };
    let Some(s) = &a.structure else {
        return result;
    };
    result.matra = Some(s.matra);
    result.baseline = Some(s.baseline);
    result.characters = s
        .chars
        .iter()
        .map(|&(word, rect)| {
            let mut c = CharacterResult {
                word,
                rect,
                label: None,
                group: None,
                score: None,
            };
            if let Some(model) = model {
                let strip = character_strip(&a.binary, rect).expect("character inside line");
                let (label, group, score) = match recognize_character(&strip, s.matra, s.baseline, model, cfg.width_tol) {
                    Ok(r) => (r.label, Some(r.group), r.score),
                    Err(_) => (REJECT.to_string(), None, 0.0),
                };
                c.label = Some(label);
                c.group = group;
                c.score = Some(score);
            }
            c
        })
        .collect();
    result
}

/// Processes lines in parallel; output order follows input order and one
/// line's failure never affects another.
pub fn run_batch(
    images: &[GrayImage],
    model: Option<&RecognitionModel>,
    cfg: &PipelineConfig,
) -> Vec<Result<TranscriptionResult>> {
    images.par_iter().map(|img| run_pipeline(img, model, cfg)).collect()
}

/// Greedy one-to-one matching of boxes by column IoU, best pairs first.
/// Returns `(truth index, predicted index)` pairs with IoU at least `min_iou`.
pub fn match_columns(truth: &[Span], pred: &[Span], min_iou: f64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            let iou = t.iou(p);
            if iou >= min_iou && iou > 0.0 {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_t, mut used_p) = (vec![false; truth.len()], vec![false; pred.len()]);
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_t[i] && !used_p[j] {
            used_t[i] = true;
            used_p[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

/// Labelled character strips for training: the line is segmented as at
/// recognition time and each found box that matches a ground-truth glyph
/// takes that glyph's label and group. Lines without structure are skipped.
pub fn harvest_samples(
    img: &GrayImage,
    truth: &GroundTruth,
    cfg: &PipelineConfig,
) -> Result<Vec<TrainingSample>> {
    let a = analyze_line(img, cfg)?;
    let Some(s) = &a.structure else {
        return Ok(Vec::new());
    };
    let truth_cols: Vec<Span> = truth.char_boxes.iter().flatten().map(Rect::columns).collect();
    let labels: Vec<(&String, Group)> = truth
        .labels
        .iter()
        .flatten()
        .zip(truth.groups.iter().flatten().copied())
        .collect();
    let pred_cols: Vec<Span> = s.chars.iter().map(|(_, r)| r.columns()).collect();
    match_columns(&truth_cols, &pred_cols, cfg.iou)
        .into_iter()
        .map(|(ti, pj)| {
            Ok(TrainingSample {
                label: labels[ti].0.clone(),
                group: labels[ti].1,
                image: character_strip(&a.binary, s.chars[pj].1)?,
                matra: s.matra,
                baseline: s.baseline,
            })
        })
        .collect()
}

/// Harvests samples from every line (in parallel, kept in line order) and
/// trains a model on them.
pub fn train_from_lines(
    lines: &[(GrayImage, GroundTruth)],
    cfg: &PipelineConfig,
    train: &TrainConfig,
) -> Result<RecognitionModel> {
    let per_line = lines
        .par_iter()
        .map(|(img, truth)| harvest_samples(img, truth, cfg))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<TrainingSample> = per_line.into_iter().flatten().collect();
    train_model(&samples, train)
}

/// Color overlay: gap columns red, headline rows blue, baseline green,
/// character box edges orange, over the grayscale line.
pub fn render_overlay(img: &GrayImage, a: &LineAnalysis) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut rgb: Vec<u8> = img.pixels().iter().flat_map(|&v| [v, v, v]).collect();
    let mut paint = |x: usize, y: usize, c: [u8; 3]| {
        let i = 3 * (y * w + x);
        rgb[i..i + 3].copy_from_slice(&c);
    };
    for g in &a.gaps {
        for x in g.start..=g.end {
            for y in 0..h {
                paint(x, y, [220, 40, 40]);
            }
        }
    }
    if let Some(s) = &a.structure {
        for y in s.matra.start..=s.matra.end {
            for x in 0..w {
                paint(x, y, [40, 80, 220]);
            }
        }
        for x in 0..w {
            paint(x, s.baseline, [40, 180, 60]);
        }
        for (_, r) in &s.chars {
            for y in r.y0..=r.y1() {
                paint(r.x0, y, [240, 150, 20]);
                paint(r.x1(), y, [240, 150, 20]);
            }
        }
    }
    rgb
}

/// PNG images of the edge map, the binarized line and the overlay.
pub fn overlay_pngs(img: &GrayImage, a: &LineAnalysis) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let (w, h) = (img.width(), img.height());
    let bin_rgb = |b: &BinaryImage| -> Vec<u8> {
        b.pixels()
            .iter()
            .flat_map(|&p| if p { [0, 0, 0] } else { [255, 255, 255] })
            .collect()
    };
    Ok(vec![
        ("edges.png", encode_png_rgb(&bin_rgb(&a.edges), w, h)?),
        ("binary.png", encode_png_rgb(&bin_rgb(&a.binary), w, h)?),
        ("overlay.png", encode_png_rgb(&render_overlay(img, a), w, h)?),
    ])
}
