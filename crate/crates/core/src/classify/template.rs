//! Run-length glyph templates and width-ranked matching.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BinaryImage;

/// Inclusive `[start, end]` column runs, one list per row.
pub type RunRows = Vec<Vec<[usize; 2]>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlyphTemplate {
    pub label: String,
    pub w: usize,
    pub h: usize,
    pub rows: RunRows,
}

pub fn encode_runs(bin: &BinaryImage) -> RunRows {
    (0..bin.height())
        .map(|y| {
            let mut runs = Vec::new();
            let row = bin.row(y);
            let mut x = 0;
            while x < row.len() {
                if row[x] {
                    let start = x;
                    while x + 1 < row.len() && row[x + 1] {
                        x += 1;
                    }
                    runs.push([start, x]);
                }
                x += 1;
            }
            runs
        })
        .collect()
}

pub fn decode_runs(w: usize, h: usize, rows: &RunRows) -> BinaryImage {
    let mut out = BinaryImage::new(w, h, false);
    for (y, runs) in rows.iter().enumerate().take(h) {
        for &[s, e] in runs {
            for x in s..=e.min(w.saturating_sub(1)) {
                out.set(x, y, true);
            }
        }
    }
    out
}

fn run_area(rows: &RunRows) -> usize {
    rows.iter().flatten().map(|[s, e]| e - s + 1).sum()
}

fn row_overlap(a: &[[usize; 2]], b: &[[usize; 2]]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i][0].max(b[j][0]);
        let hi = a[i][1].min(b[j][1]);
        if lo <= hi {
            n += hi - lo + 1;
        }
        if a[i][1] < b[j][1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    n
}

/// Dice overlap of two run encodings laid on the same grid; 0 when both
/// are empty.
pub fn run_dice(a: &RunRows, b: &RunRows) -> f64 {
    let total = run_area(a) + run_area(b);
    if total == 0 {
        return 0.0;
    }
    let inter: usize = a.iter().zip(b).map(|(ra, rb)| row_overlap(ra, rb)).sum();
    2.0 * inter as f64 / total as f64
}

impl GlyphTemplate {
    /// Template from the ink bounding box of `glyph`.
    pub fn from_glyph(label: impl Into<String>, glyph: &BinaryImage) -> Result<Self> {
        let bbox = glyph.foreground_bbox().ok_or(Error::BlankCharacter)?;
        let crop = glyph.crop(bbox)?;
        Ok(GlyphTemplate {
            label: label.into(),
            w: bbox.w,
            h: bbox.h,
            rows: encode_runs(&crop),
        })
    }

    pub fn to_bitmap(&self) -> BinaryImage {
        decode_runs(self.w, self.h, &self.rows)
    }

    pub fn area(&self) -> usize {
        run_area(&self.rows)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(format!("template {:?}: {m}", self.label)));
        if self.w == 0 || self.h == 0 {
            return bad("empty extent".into());
        }
        if self.rows.len() != self.h {
            return bad(format!("{} rows for height {}", self.rows.len(), self.h));
        }
        for runs in &self.rows {
            let mut next = 0;
            for &[s, e] in runs {
                if s < next || e < s || e >= self.w {
                    return bad("runs must be sorted, disjoint and inside the width".into());
                }
                next = e + 1;
            }
        }
        Ok(())
    }

    /// Dice score against a candidate already on this template's grid.
    pub fn dice(&self, candidate: &BinaryImage) -> f64 {
        run_dice(&self.rows, &encode_runs(candidate))
    }
}

/// Nearest-neighbour resampling to `w` x `h`, sampling pixel centres.
pub fn resample_nearest(src: &BinaryImage, w: usize, h: usize) -> BinaryImage {
    let (sw, sh) = (src.width(), src.height());
    BinaryImage::from_fn(w, h, |x, y| src.get((2 * x + 1) * sw / (2 * w), (2 * y + 1) * sh / (2 * h)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateMatch {
    pub label: String,
    pub score: f64,
    /// Position of the winning template in the searched list.
    pub index: usize,
}

/// Matches the ink of `ch` against templates whose width is within
/// `width_tol` of the candidate's, nearest width first. The candidate is
/// rescaled to each template's box before scoring.
pub fn template_match(
    ch: &BinaryImage,
    templates: &[GlyphTemplate],
    width_tol: f64,
) -> Option<TemplateMatch> {
    let bbox = ch.foreground_bbox()?;
    let glyph = ch.crop(bbox).ok()?;
    let cw = bbox.w;
    let mut order: Vec<usize> = (0..templates.len())
        .filter(|&i| (templates[i].w.abs_diff(cw) as f64) <= width_tol * cw as f64)
        .collect();
    order.sort_by_key(|&i| (templates[i].w.abs_diff(cw), templates[i].w, i));
    let mut best: Option<TemplateMatch> = None;
    for i in order {
        let t = &templates[i];
        let score = t.dice(&resample_nearest(&glyph, t.w, t.h));
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(TemplateMatch {
                label: t.label.clone(),
                score,
                index: i,
            });
        }
    }
    best
}

/// One template per distinct labelled sample, at most `max_per_label` per
/// label (earliest kept), sorted by width.
pub fn build_templates(
    samples: &[(String, BinaryImage)],
    max_per_label: usize,
) -> Result<Vec<GlyphTemplate>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no template samples".into()));
    }
    let mut per_label: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out: Vec<GlyphTemplate> = Vec::new();
    for (label, img) in samples {
        let t = GlyphTemplate::from_glyph(label.clone(), img)?;
        let n = per_label.entry(label.as_str()).or_default();
        if *n >= max_per_label.max(1) || out.contains(&t) {
            continue;
        }
        *n += 1;
        out.push(t);
    }
    out.sort_by_key(|t| t.w);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bitmap(rng: &mut ChaCha8Rng, w: usize, h: usize, p: f64) -> BinaryImage {
        BinaryImage::from_fn(w, h, |_, _| rng.random_bool(p))
    }

    fn dense_dice(a: &BinaryImage, b: &BinaryImage) -> f64 {
        let (mut inter, mut total) = (0usize, 0usize);
        for (x, y) in a.pixels().iter().zip(b.pixels()) {
            inter += (*x && *y) as usize;
            total += *x as usize + *y as usize;
        }
        if total == 0 {
            0.0
        } else {
            2.0 * inter as f64 / total as f64
        }
    }

    #[test]
    fn self_match_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let g = random_bitmap(&mut rng, 9, 11, 0.4);
            if g.is_blank() {
                continue;
            }
            let t = GlyphTemplate::from_glyph("x", &g).unwrap();
            let m = template_match(&g, std::slice::from_ref(&t), 0.25).unwrap();
            assert_eq!(m.score, 1.0);
            assert_eq!(t.dice(&t.to_bitmap()), 1.0);
        }
    }

    #[test]
    fn blank_candidate_scores_zero() {
        let t = GlyphTemplate::from_glyph("x", &BinaryImage::new(4, 4, true)).unwrap();
        assert_eq!(t.dice(&BinaryImage::new(4, 4, false)), 0.0);
    }

    #[test]
    fn run_dice_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let (w, h) = (rng.random_range(1..24), rng.random_range(1..24));
            let (pa, pb) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let a = random_bitmap(&mut rng, w, h, pa);
            let b = random_bitmap(&mut rng, w, h, pb);
            let run = run_dice(&encode_runs(&a), &encode_runs(&b));
            assert!((run - dense_dice(&a, &b)).abs() < 1e-12);
            assert_eq!(run, run_dice(&encode_runs(&b), &encode_runs(&a)));
        }
    }

    #[test]
    fn width_tolerance_excludes_far_templates() {
        let narrow = GlyphTemplate::from_glyph("n", &BinaryImage::new(4, 8, true)).unwrap();
        let cand = BinaryImage::new(10, 8, true);
        assert!(template_match(&cand, std::slice::from_ref(&narrow), 0.25).is_none());
        let close = GlyphTemplate::from_glyph("c", &BinaryImage::new(12, 8, true)).unwrap();
        let m = template_match(&cand, &[narrow, close], 0.25).unwrap();
        assert_eq!((m.label.as_str(), m.index), ("c", 1));
    }

    #[test]
    fn nearest_width_wins_ties() {
        let a = GlyphTemplate::from_glyph("wide", &BinaryImage::new(12, 8, true)).unwrap();
        let b = GlyphTemplate::from_glyph("exact", &BinaryImage::new(10, 8, true)).unwrap();
        let m = template_match(&BinaryImage::new(10, 8, true), &[a, b], 0.25).unwrap();
        assert_eq!(m.label, "exact");
    }

    #[test]
    fn build_templates_keeps_duplicates_per_label_apart() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = BinaryImage::new(6, 6, true);
        let b = random_bitmap(&mut rng, 3, 7, 0.6);
        let samples = vec![
            ("p".to_string(), a.clone()),
            ("p".to_string(), b.clone()),
            ("p".to_string(), a.clone()),
        ];
        let ts = build_templates(&samples, 8).unwrap();
        assert_eq!(ts.len(), 2);
        assert!(ts.windows(2).all(|w| w[0].w <= w[1].w));
        assert!(ts.iter().all(|t| t.label == "p"));
        assert_eq!(build_templates(&samples, 1).unwrap().len(), 1);
        assert!(matches!(build_templates(&[], 8), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn single_sample_round_trips() {
        let g = BinaryImage::from_fn(5, 4, |x, y| (x + y) % 3 == 0);
        let ts = build_templates(&[("q".into(), g.clone())], 8).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].to_bitmap(), g.crop(g.foreground_bbox().unwrap()).unwrap());
        ts[0].validate().unwrap();
    }

    #[test]
    fn resample_identity_and_doubling() {
        let g = BinaryImage::from_fn(3, 2, |x, y| x == y);
        assert_eq!(resample_nearest(&g, 3, 2), g);
        let d = resample_nearest(&g, 6, 4);
        assert!(d.get(0, 0) && d.get(1, 1) && d.get(2, 2) && d.get(3, 3) && !d.get(2, 0));
    }

    fn bitmap() -> impl Strategy<Value = BinaryImage> {
        (1usize..20, 1usize..20).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h)
                .prop_map(move |px| BinaryImage::from_vec(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rle_round_trip(b in bitmap()) {
            let rows = encode_runs(&b);
            prop_assert_eq!(decode_runs(b.width(), b.height(), &rows), b);
        }

        #[test]
        fn dice_in_unit_interval((a, b) in (1usize..16, 1usize..16).prop_flat_map(|(w, h)| {
            let v = proptest::collection::vec(any::<bool>(), w * h);
            (v.clone(), v).prop_map(move |(p, q)| (
                BinaryImage::from_vec(w, h, p).unwrap(),
                BinaryImage::from_vec(w, h, q).unwrap(),
            ))
        })) {
            let s = run_dice(&encode_runs(&a), &encode_runs(&b));
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
