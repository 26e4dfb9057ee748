//! Character segmentation inside the middle zone of a word.
//!
//! The headline is suppressed so that characters become disconnected, then
//! every column that is empty between the headline and the baseline marks a
//! boundary. Kerned pairs, where no straight empty column exists, are split
//! with a deviation-bounded monotone path found by dynamic programming.

use serde::{Deserialize, Serialize};

use crate::imaging::{BinaryImage, Rect, Span};
use crate::line::{without_rows, zero_runs};

/// A separation path from the baseline up to the row below the headline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanPath {
    /// Row of `cols[0]`; the path climbs one row per entry.
    pub bottom_row: usize,
    pub start_col: usize,
    pub cols: Vec<usize>,
}

impl ScanPath {
    pub fn top_row(&self) -> usize {
        self.bottom_row + 1 - self.cols.len()
    }

    /// `(row, col)` pairs from the baseline upward.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.bottom_row - i, c))
    }

    /// Sum of `|col - start_col|` over the path.
    pub fn cost(&self) -> usize {
        self.cols.iter().map(|&c| c.abs_diff(self.start_col)).sum()
    }

    pub fn max_deviation(&self) -> usize {
        self.cols
            .iter()
            .map(|&c| c.abs_diff(self.start_col))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharBox {
    pub rect: Rect,
    pub order: usize,
}

/// Clears the headline rows.
pub fn remove_matra(bin: &BinaryImage, matra: Span) -> BinaryImage {
    without_rows(bin, matra)
}

fn middle_rows(bin: &BinaryImage, matra: Span, baseline: usize) -> std::ops::RangeInclusive<usize> {
    matra.end + 1..=baseline.min(bin.height().saturating_sub(1))
}

/// Foreground count per column over the rows below the headline down to the baseline.
pub fn middle_projection(bin: &BinaryImage, matra: Span, baseline: usize) -> Vec<usize> {
    let mut counts = vec![0; bin.width()];
    for y in middle_rows(bin, matra, baseline) {
        for (c, &p) in counts.iter_mut().zip(bin.row(y)) {
            *c += p as usize;
        }
    }
    counts
}

/// Maximal runs of columns along which a straight scan from the baseline
/// reaches the headline without meeting foreground.
pub fn straight_scan_boundaries(bin: &BinaryImage, matra: Span, baseline: usize) -> Vec<Span> {
    zero_runs(&middle_projection(bin, matra, baseline))
}

/// Cheapest foreground-free path from the baseline to the row under the
/// headline, moving at most one column per row and staying within
/// `max_dev` columns of `start_col`. Cost is the summed column deviation;
/// ties go to the leftmost top column.
pub fn piecewise_scan(
    bin: &BinaryImage,
    start_col: usize,
    matra: Span,
    baseline: usize,
    max_dev: usize,
) -> Option<ScanPath> {
    let w = bin.width();
    if start_col >= w || matra.end >= baseline || baseline >= bin.height() {
        return None;
    }
    let lo = start_col.saturating_sub(max_dev);
    let hi = (start_col + max_dev).min(w - 1);
    let n = hi - lo + 1;
    let top = matra.end + 1;
    let rows = baseline - top + 1;

    // cost[i][j]: best cost of a path from the baseline to row (baseline - i), column lo + j
    let mut cost = vec![vec![usize::MAX; n]; rows];
    for i in 0..rows {
        let y = baseline - i;
        for j in 0..n {
            let x = lo + j;
            if bin.get(x, y) {
                continue;
            }
            let here = x.abs_diff(start_col);
            let prev = if i == 0 {
                0
            } else {
                let below = &cost[i - 1];
                let mut best = usize::MAX;
                for k in j.saturating_sub(1)..=(j + 1).min(n - 1) {
                    best = best.min(below[k]);
                }
                if best == usize::MAX {
                    continue;
                }
                best
            };
            cost[i][j] = prev + here;
        }
    }

    let last = &cost[rows - 1];
    let best = *last.iter().min()?;
    if best == usize::MAX {
        return None;
    }
    let mut j = last.iter().position(|&c| c == best)?;
    let mut cols = vec![0; rows];
    cols[rows - 1] = lo + j;
    for i in (1..rows).rev() {
        let need = cost[i][j] - (lo + j).abs_diff(start_col);
        let below = &cost[i - 1];
        j = (j.saturating_sub(1)..=(j + 1).min(n - 1)).find(|&k| below[k] == need)?;
        cols[i - 1] = lo + j;
    }
    Some(ScanPath {
        bottom_row: baseline,
        start_col,
        cols,
    })
}

/// Character boxes of one word, left to right.
///
/// `word_bin` still carries its headline. Straight-scan runs at least
/// `min_gap_width` columns wide separate characters; inside each remaining
/// segment, projection valleys are tried as starting points for
/// [`piecewise_scan`] to split kerned pairs. Boxes cover the headline rows
/// through the baseline.
pub fn extract_characters(
    word_bin: &BinaryImage,
    matra: Span,
    baseline: usize,
    min_gap_width: usize,
    max_dev: usize,
) -> Vec<CharBox> {
    if matra.end >= baseline || baseline >= word_bin.height() {
        return Vec::new();
    }
    let body = remove_matra(word_bin, matra);
    let proj = middle_projection(&body, matra, baseline);
    let boundaries: Vec<Span> = zero_runs(&proj)
        .into_iter()
        .filter(|r| r.len() >= min_gap_width.max(1))
        .collect();

    let mut segments = Vec::new();
    let mut start = 0;
    for b in boundaries.iter().chain(std::iter::once(&Span::new(proj.len(), proj.len()))) {
        if b.start > start {
            // trim to the columns that hold ink
            let ink: Vec<usize> = (start..b.start).filter(|&x| proj[x] > 0).collect();
            if let (Some(&a), Some(&z)) = (ink.first(), ink.last()) {
                segments.push(Span::new(a, z));
            }
        }
        start = b.end + 1;
    }

    let mut columns = Vec::new();
    for seg in segments {
        columns.extend(split_kerned(&body, &proj, seg, matra, baseline, max_dev));
    }
    let rows = matra.start..=baseline;
    columns
        .into_iter()
        .enumerate()
        .map(|(order, c)| CharBox {
            rect: Rect::from_inclusive(c.start, *rows.start(), c.end, *rows.end()),
            order,
        })
        .collect()
}

fn split_kerned(
    body: &BinaryImage,
    proj: &[usize],
    seg: Span,
    matra: Span,
    baseline: usize,
    max_dev: usize,
) -> Vec<Span> {
    if max_dev == 0 || seg.len() < 3 {
        return vec![seg];
    }
    let total: usize = proj[seg.start..=seg.end].iter().sum();
    let mut seen_partitions = Vec::new();
    let mut cuts = Vec::new();
    for x in seg.start + 1..seg.end {
        if proj[x] == 0 || proj[x] > proj[x - 1] || proj[x] > proj[x + 1] {
            continue;
        }
        let Some(path) = piecewise_scan(body, x, matra, baseline, max_dev) else {
            continue;
        };
        // ink of the segment strictly left of the path
        let left: usize = path
            .points()
            .map(|(y, c)| (seg.start..c.min(seg.end + 1)).filter(|&xx| body.get(xx, y)).count())
            .sum();
        if left == 0 || left == total || seen_partitions.contains(&left) {
            continue;
        }
        seen_partitions.push(left);
        let mean = path.cols.iter().sum::<usize>() as f64 / path.cols.len() as f64;
        cuts.push(mean.round() as usize);
    }
    cuts.sort_unstable();
    cuts.dedup();

    let mut out = Vec::new();
    let mut start = seg.start;
    for cut in cuts {
        if cut <= start || cut > seg.end {
            continue;
        }
        let left = Span::new(start, cut - 1);
        let has_ink = |s: &Span| (s.start..=s.end).any(|x| proj[x] > 0);
        if has_ink(&left) && has_ink(&Span::new(cut, seg.end)) {
            out.push(left);
            start = cut;
        }
    }
    out.push(Span::new(start, seg.end));
    out
}
