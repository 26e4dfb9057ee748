//! Segmentation and recognition scores against ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Rect, Span};
use crate::pipeline::{match_columns, TranscriptionResult};
use crate::synth::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub lines: usize,
    pub failed_lines: usize,
    pub total_words: usize,
    /// Predicted word boxes whose columns equal a ground-truth word exactly.
    pub words_found: usize,
    pub total_chars: usize,
    pub chars_segmented_correctly: usize,
    pub chars_recognized: usize,
    pub segmentation_rate: f64,
    pub recognition_rate: f64,
}

impl Metrics {
    pub fn from_counts(total_chars: usize, segmented: usize, recognized: usize) -> Self {
        let mut m = Metrics {
            lines: 0,
            failed_lines: 0,
            total_words: 0,
            words_found: 0,
            total_chars,
            chars_segmented_correctly: segmented,
            chars_recognized: recognized,
            segmentation_rate: 0.0,
            recognition_rate: 0.0,
        };
        m.update_rates();
        m
    }

    fn update_rates(&mut self) {
        let rate = |n: usize| if self.total_chars == 0 { 0.0 } else { n as f64 / self.total_chars as f64 };
        self.segmentation_rate = rate(self.chars_segmented_correctly);
        self.recognition_rate = rate(self.chars_recognized);
    }

    pub fn recognition_percent(&self) -> String {
        percent_one_decimal(self.chars_recognized, self.total_chars)
    }

    pub fn segmentation_percent(&self) -> String {
        percent_one_decimal(self.chars_segmented_correctly, self.total_chars)
    }
}

/// `num / den` as a percentage with one decimal, truncated (not rounded)
/// and computed in integers.
pub fn percent_one_decimal(num: usize, den: usize) -> String {
    if den == 0 {
        return "0.0%".to_string();
    }
    let tenths = num as u128 * 1000 / den as u128;
    format!("{}.{}%", tenths / 10, tenths % 10)
}

/// Scores results against ground truths aligned by position. Characters
/// match one-to-one by column IoU of at least `min_iou`, best pairs first;
/// a matched character counts as recognized when its label is right.
pub fn evaluate(results: &[TranscriptionResult], truths: &[GroundTruth], min_iou: f64) -> Result<Metrics> {
    if results.len() != truths.len() {
        return Err(Error::LengthMismatch(results.len(), truths.len()));
    }
    let mut m = Metrics::from_counts(0, 0, 0);
    m.lines = results.len();
    for (r, t) in results.iter().zip(truths) {
        m.failed_lines += r.failure.is_some() as usize;
        m.total_words += t.word_boxes.len();
        let pred_words: Vec<Span> = r.words.iter().map(Rect::columns).collect();
        m.words_found += t
            .word_boxes
            .iter()
            .filter(|w| pred_words.contains(&w.columns()))
            .count();

        let truth_cols: Vec<Span> = t.char_boxes.iter().flatten().map(Rect::columns).collect();
        let labels: Vec<&String> = t.labels.iter().flatten().collect();
        let pred_cols: Vec<Span> = r.characters.iter().map(|c| c.rect.columns()).collect();
        m.total_chars += truth_cols.len();
        for (ti, pj) in match_columns(&truth_cols, &pred_cols, min_iou) {
            m.chars_segmented_correctly += 1;
            if r.characters[pj].label.as_ref() == Some(labels[ti]) {
                m.chars_recognized += 1;
            }
        }
    }
    m.update_rates();
    Ok(m)
}
