//! Projection profiles, word gaps, headline (Matra) and baseline detection,
//! and zone separation of a single text line.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::components::label_components;
use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage, Rect, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// One count per row.
    Horizontal,
    /// One count per column.
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionProfile {
    pub axis: Axis,
    pub counts: Vec<usize>,
}

/// Row bands of a line; any of them may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zones {
    pub upper: Range<usize>,
    pub middle: Range<usize>,
    pub lower: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineStructure {
    pub word_boxes: Vec<Rect>,
    pub matra: Span,
    pub baseline: usize,
    pub zones: Zones,
}

/// Foreground count per column.
pub fn vertical_projection(bin: &BinaryImage) -> ProjectionProfile {
    let mut counts = vec![0; bin.width()];
    for y in 0..bin.height() {
        for (c, &p) in counts.iter_mut().zip(bin.row(y)) {
            *c += p as usize;
        }
    }
    ProjectionProfile {
        axis: Axis::Vertical,
        counts,
    }
}

/// Foreground count per row.
pub fn horizontal_projection(bin: &BinaryImage) -> ProjectionProfile {
    ProjectionProfile {
        axis: Axis::Horizontal,
        counts: (0..bin.height())
            .map(|y| bin.row(y).iter().filter(|&&p| p).count())
            .collect(),
    }
}

/// Maximal runs of zero counts, as inclusive spans.
pub fn zero_runs(counts: &[usize]) -> Vec<Span> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &c) in counts.iter().enumerate() {
        match (c == 0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(Span::new(s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(Span::new(s, counts.len() - 1));
    }
    runs
}

/// Interior zero-count column runs at least `min_gap_width` wide. Runs that
/// touch either image edge are margins and never reported.
pub fn detect_word_gaps(profile: &ProjectionProfile, min_gap_width: usize) -> Vec<Span> {
    debug_assert_eq!(profile.axis, Axis::Vertical);
    let last = profile.counts.len().saturating_sub(1);
    zero_runs(&profile.counts)
        .into_iter()
        .filter(|r| r.start > 0 && r.end < last && r.len() >= min_gap_width.max(1))
        .collect()
}

/// Full-height word rectangles between consecutive gaps and the image edges.
pub fn split_words(line: &GrayImage, gaps: &[Span]) -> Vec<Rect> {
    split_columns(line.width(), line.height(), gaps)
}

pub(crate) fn split_columns(width: usize, height: usize, gaps: &[Span]) -> Vec<Rect> {
    let mut words = Vec::new();
    let mut start = 0;
    for g in gaps {
        if g.start > start {
            words.push(Rect::new(start, 0, g.start - start, height));
        }
        start = g.end + 1;
    }
    if start < width {
        words.push(Rect::new(start, 0, width - start, height));
    }
    words
}

/// Pastes binarized words back into a `width` x `height` line.
pub fn reassemble_line(
    width: usize,
    height: usize,
    words: &[(Rect, BinaryImage)],
) -> Result<BinaryImage> {
    let mut order: Vec<&(Rect, BinaryImage)> = words.iter().collect();
    order.sort_by_key(|(r, _)| r.x0);
    for pair in order.windows(2) {
        if pair[0].0.x1() >= pair[1].0.x0 {
            return Err(Error::Overlap);
        }
    }
    let mut out = BinaryImage::new(width, height, false);
    for (rect, img) in order {
        if !rect.fits(width, height) || img.width() != rect.w || img.height() != rect.h {
            return Err(Error::OutOfBounds {
                rect: *rect,
                width,
                height,
            });
        }
        out.blit(img, rect.x0, rect.y0);
    }
    Ok(out)
}

/// Headline span: the maximal run of rows whose count is at least
/// `band * max` and that contains the topmost row achieving the maximum.
pub fn detect_matra(profile: &ProjectionProfile, band: f64) -> Result<Span> {
    debug_assert_eq!(profile.axis, Axis::Horizontal);
    let counts = &profile.counts;
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::EmptyLine);
    }
    let peak = counts.iter().position(|&c| c == max).unwrap_or(0);
    let floor = band * max as f64;
    let in_band = |c: usize| c as f64 >= floor;
    let mut top = peak;
    while top > 0 && in_band(counts[top - 1]) {
        top -= 1;
    }
    let mut bottom = peak;
    while bottom + 1 < counts.len() && in_band(counts[bottom + 1]) {
        bottom += 1;
    }
    Ok(Span::new(top, bottom))
}

/// Baseline row: the most common lowermost row among components that reach
/// the half-height row or lie below it.
///
/// Components are labeled with the headline rows suppressed, so that
/// characters hanging from a shared headline count individually. Ties go to
/// the lower row on the image. With no qualifying component the lowest
/// foreground row is used.
pub fn detect_baseline(bin: &BinaryImage, matra: Span) -> Result<usize> {
    let lowest_fg = (0..bin.height())
        .rev()
        .find(|&y| bin.row(y).iter().any(|&p| p))
        .ok_or(Error::EmptyLine)?;
    let half = bin.height() / 2;
    let body = without_rows(bin, matra);
    let mut votes = vec![0usize; bin.height()];
    for c in label_components(&body).components {
        if c.bbox.y1() >= half {
            votes[c.lowest_row] += 1;
        }
    }
    let best = votes.iter().copied().max().unwrap_or(0);
    if best == 0 {
        return Ok(lowest_fg);
    }
    Ok(votes.iter().rposition(|&v| v == best).unwrap_or(lowest_fg))
}

pub(crate) fn without_rows(bin: &BinaryImage, rows: Span) -> BinaryImage {
    let mut out = bin.clone();
    for y in rows.start..=rows.end.min(bin.height().saturating_sub(1)) {
        for x in 0..bin.width() {
            out.set(x, y, false);
        }
    }
    out
}

/// Splits the rows of a `height`-row line into upper, middle and lower zones.
pub fn split_zones(height: usize, matra: Span, baseline: usize) -> Result<Zones> {
    if matra.end >= baseline {
        return Err(Error::InvalidStructure(format!(
            "headline rows {}..={} not above baseline {baseline}",
            matra.start, matra.end
        )));
    }
    if baseline >= height {
        return Err(Error::InvalidStructure(format!(
            "baseline {baseline} outside {height} rows"
        )));
    }
    Ok(Zones {
        upper: 0..matra.start,
        middle: matra.end + 1..baseline + 1,
        lower: baseline + 1..height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vprof(counts: &[usize]) -> ProjectionProfile {
        ProjectionProfile {
            axis: Axis::Vertical,
            counts: counts.to_vec(),
        }
    }

    fn hprof(counts: &[usize]) -> ProjectionProfile {
        ProjectionProfile {
            axis: Axis::Horizontal,
            counts: counts.to_vec(),
        }
    }

    #[test]
    fn projections() {
        let blank = BinaryImage::new(9, 7, false);
        assert!(vertical_projection(&blank).counts.iter().all(|&c| c == 0));
        assert!(horizontal_projection(&blank).counts.iter().all(|&c| c == 0));
        let col = BinaryImage::from_fn(9, 7, |x, _| x == 3);
        let v = vertical_projection(&col).counts;
        assert_eq!(v[3], 7);
        assert_eq!(v.iter().sum::<usize>(), 7);
        let row = BinaryImage::from_fn(9, 7, |_, y| y == 2);
        assert_eq!(horizontal_projection(&row).counts[2], 9);
    }

    #[test]
    fn word_gap_cases() {
        assert_eq!(detect_word_gaps(&vprof(&[5, 4, 0, 0, 0, 6, 7]), 2), vec![Span::new(2, 4)]);
        assert!(detect_word_gaps(&vprof(&[1, 2, 3]), 2).is_empty());
        assert_eq!(
            detect_word_gaps(&vprof(&[0, 0, 5, 0, 0, 0, 5, 0]), 2),
            vec![Span::new(3, 5)]
        );
        assert!(detect_word_gaps(&vprof(&[3, 0, 3]), 2).is_empty());
        assert_eq!(detect_word_gaps(&vprof(&[3, 0, 3]), 1), vec![Span::new(1, 1)]);
    }

    #[test]
    fn split_word_cases() {
        let line = GrayImage::new(20, 6, 0);
        assert_eq!(
            split_words(&line, &[Span::new(8, 11)]),
            vec![Rect::new(0, 0, 8, 6), Rect::new(12, 0, 8, 6)]
        );
        assert_eq!(split_words(&line, &[]), vec![line.full_rect()]);
    }

    #[test]
    fn reassemble_cases() {
        let img = BinaryImage::from_fn(6, 3, |x, y| (x + y) % 2 == 0);
        assert_eq!(reassemble_line(6, 3, &[(img.full_rect(), img.clone())]).unwrap(), img);

        let a = BinaryImage::new(2, 3, true);
        let b = BinaryImage::new(2, 3, true);
        let out = reassemble_line(7, 3, &[(Rect::new(0, 0, 2, 3), a.clone()), (Rect::new(5, 0, 2, 3), b)])
            .unwrap();
        assert!((2..5).all(|x| (0..3).all(|y| !out.get(x, y))));
        assert_eq!(out.count_foreground(), 12);

        let err = reassemble_line(7, 3, &[(Rect::new(0, 0, 2, 3), a.clone()), (Rect::new(1, 0, 2, 3), a)]);
        assert!(matches!(err, Err(Error::Overlap)));
    }

    #[test]
    fn matra_cases() {
        assert_eq!(detect_matra(&hprof(&[1, 9, 9, 2, 1]), 0.85).unwrap(), Span::new(1, 2));
        assert_eq!(detect_matra(&hprof(&[1, 9, 1, 9, 1]), 0.85).unwrap(), Span::new(1, 1));
        assert_eq!(detect_matra(&hprof(&[0, 8, 9, 8, 1]), 0.85).unwrap(), Span::new(1, 3));
        assert!(matches!(detect_matra(&hprof(&[0, 0]), 0.85), Err(Error::EmptyLine)));
    }

    /// Columns of `height` rows; each glyph is a one-pixel-wide stroke from
    /// the matra down to its bottom row.
    fn strokes(height: usize, matra: Span, bottoms: &[usize]) -> BinaryImage {
        let w = bottoms.len() * 2 + 1;
        BinaryImage::from_fn(w, height, |x, y| {
            matra.contains(y) || (x % 2 == 1 && y > matra.end && y <= bottoms[x / 2])
        })
    }

    #[test]
    fn baseline_mode() {
        let m = Span::new(4, 5);
        assert_eq!(detect_baseline(&strokes(24, m, &[20, 20, 18]), m).unwrap(), 20);
        assert_eq!(detect_baseline(&strokes(24, m, &[20, 18]), m).unwrap(), 20);
        assert_eq!(detect_baseline(&strokes(24, m, &[18, 20, 22, 18]), m).unwrap(), 18);
    }

    #[test]
    fn baseline_ignores_upper_components() {
        let m = Span::new(4, 5);
        let mut bin = strokes(24, m, &[20, 20, 20]);
        // short marks above the half row vote for nothing
        for x in [1, 3] {
            bin.set(x, 1, true);
            bin.set(x, 2, true);
        }
        assert_eq!(detect_baseline(&bin, m).unwrap(), 20);
        assert!(matches!(
            detect_baseline(&BinaryImage::new(4, 4, false), m),
            Err(Error::EmptyLine)
        ));
    }

    #[test]
    fn baseline_falls_back_to_lowest_row() {
        let m = Span::new(1, 1);
        let bin = BinaryImage::from_fn(5, 20, |_, y| y <= 3);
        assert_eq!(detect_baseline(&bin, m).unwrap(), 3);
    }

    #[test]
    fn zones() {
        let z = split_zones(30, Span::new(4, 6), 24).unwrap();
        assert_eq!((z.upper, z.middle, z.lower), (0..4, 7..25, 25..30));
        assert!(split_zones(30, Span::new(0, 1), 10).unwrap().upper.is_empty());
        assert!(split_zones(30, Span::new(2, 3), 29).unwrap().lower.is_empty());
        assert!(matches!(split_zones(30, Span::new(4, 8), 8), Err(Error::InvalidStructure(_))));
    }

    proptest! {
        #[test]
        fn gaps_are_disjoint_zero_runs(counts in proptest::collection::vec(prop_oneof![Just(0usize), 1usize..5], 1..40), min in 1usize..4) {
            let gaps = detect_word_gaps(&vprof(&counts), min);
            for g in &gaps {
                prop_assert!((g.start..=g.end).all(|i| counts[i] == 0));
                prop_assert!(g.len() >= min);
            }
            for w in gaps.windows(2) {
                prop_assert!(w[0].end + 1 < w[1].start);
            }
            // words and gaps partition the columns exactly once
            let words = split_columns(counts.len(), 1, &gaps);
            let mut cover = vec![0; counts.len()];
            for r in &words {
                cover[r.x0..=r.x1()].iter_mut().for_each(|c| *c += 1);
            }
            for g in &gaps {
                cover[g.start..=g.end].iter_mut().for_each(|c| *c += 1);
            }
            prop_assert!(cover.iter().all(|&c| c == 1));
        }

        #[test]
        fn matra_contains_a_max_row(counts in proptest::collection::vec(0usize..20, 1..30), band in 0.5f64..1.0) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let m = detect_matra(&hprof(&counts), band).unwrap();
            let max = *counts.iter().max().unwrap();
            prop_assert!((m.start..=m.end).any(|y| counts[y] == max));
        }

        #[test]
        fn zones_partition_rows(h in 3usize..40, a in 0usize..40, b in 0usize..40, c in 0usize..40) {
            let mut v = [a % h, b % h, c % h];
            v.sort();
            prop_assume!(v[1] < v[2]);
            let z = split_zones(h, Span::new(v[0], v[1]), v[2]).unwrap();
            let mut cover = vec![0; h];
            for y in z.upper.clone().chain(z.middle.clone()).chain(z.lower.clone()).chain(v[0]..=v[1]) {
                cover[y] += 1;
            }
            prop_assert!(cover.iter().all(|&c| c == 1));
        }
    }
}
