//! Procedural headline-script text lines with exact ground truth.
//!
//! Glyphs are built from strokes hanging under a headline segment. A line
//! places words of glyphs on a shared baseline; glyphs in one word share a
//! continuous headline and are separated below it by blank columns.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::Group;
use crate::components::label_components;
use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage, Rect, Span};
use crate::segment::extract_characters;

/// Rows reserved above the headline for ascender strokes.
pub const ASCENDER_ROWS: usize = 4;
/// Rows reserved below the baseline for descender strokes.
pub const DESCENDER_ROWS: usize = 4;
pub const MARGIN_Y: usize = 2;
pub const MARGIN_X: usize = 4;
/// Blank columns between glyphs of one word.
pub const GLYPH_SPACING: usize = 2;
const INK: u8 = 40;
const GROUND: u8 = 210;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    DarkOnLight,
    LightOnDark,
}

/// Inclusive `[min, max]` range.
pub type Range2 = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub alphabet_seed: u64,
    pub alphabet_size: usize,
    pub words: Range2,
    pub glyphs_per_word: Range2,
    /// Split into three bands: modifier, basic, compound.
    pub glyph_w: Range2,
    /// Body height between headline and baseline; one value is drawn per alphabet.
    pub glyph_h: Range2,
    pub matra_thickness: usize,
    pub gap_width: Range2,
    pub ascender_prob: f64,
    pub descender_prob: f64,
    pub noise_sigma: f64,
    pub polarity: Polarity,
    /// Intensity added linearly from 0 at the left edge to this at the right.
    pub background_ramp: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            alphabet_seed: 0,
            alphabet_size: 10,
            words: (2, 4),
            glyphs_per_word: (2, 4),
            glyph_w: (4, 20),
            glyph_h: (12, 16),
            matra_thickness: 2,
            gap_width: (6, 12),
            ascender_prob: 0.3,
            descender_prob: 0.15,
            noise_sigma: 0.0,
            polarity: Polarity::DarkOnLight,
            background_ramp: 0.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        for (name, (lo, hi)) in [
            ("words", self.words),
            ("glyphs_per_word", self.glyphs_per_word),
            ("glyph_w", self.glyph_w),
            ("glyph_h", self.glyph_h),
            ("gap_width", self.gap_width),
        ] {
            if lo == 0 || lo > hi {
                return Err(Error::InvalidSpec(format!("{name} must be a non-empty range of positive values")));
            }
        }
        if self.glyph_w.0 < 4 || self.glyph_w.1 - self.glyph_w.0 < 4 {
            return bad("glyph_w must start at 4 or more and span at least 5 values");
        }
        if self.glyph_h.0 < 6 {
            return bad("glyph_h must be at least 6");
        }
        if self.gap_width.0 < 3 {
            return bad("gap_width must be at least 3");
        }
        if self.alphabet_size < 3 {
            return bad("alphabet_size must be at least 3");
        }
        if self.matra_thickness == 0 {
            return bad("matra_thickness must be positive");
        }
        if !(0.0..=1.0).contains(&self.ascender_prob) || !(0.0..=1.0).contains(&self.descender_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 || !self.background_ramp.is_finite() {
            return bad("noise_sigma must be finite and non-negative; background_ramp finite");
        }
        Ok(())
    }

    /// Width range of each group's band.
    pub fn width_band(&self, group: Group) -> Range2 {
        let (lo, hi) = self.glyph_w;
        // three equal bands separated by one unused width
        let band = (hi - lo - 1) / 3;
        let k = match group {
            Group::Modifier => 0,
            Group::Basic => 1,
            Group::Compound => 2,
        };
        let start = lo + k * (band + 1);
        (start, start + band - 1)
    }
}

/// A glyph prototype: `image` spans the ascender band, the headline, the
/// body and the descender band, and is `w` columns wide.
#[derive(Debug, Clone, PartialEq)]
pub struct Glyph {
    pub label: String,
    pub group: Group,
    pub image: BinaryImage,
    pub ascender: bool,
    pub descender: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    pub matra_thickness: usize,
    pub body_h: usize,
}

impl Alphabet {
    pub fn glyph_height(&self) -> usize {
        ASCENDER_ROWS + self.matra_thickness + self.body_h + DESCENDER_ROWS
    }

    pub fn matra_rows(&self) -> Span {
        Span::new(ASCENDER_ROWS, ASCENDER_ROWS + self.matra_thickness - 1)
    }

    pub fn baseline_row(&self) -> usize {
        ASCENDER_ROWS + self.matra_thickness + self.body_h - 1
    }
}

/// Builds the glyph set for `spec.alphabet_size` and `spec.alphabet_seed`.
pub fn generate_alphabet(spec: &SynthSpec) -> Result<(Alphabet, Vec<Glyph>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.alphabet_seed);
    let geom = Alphabet {
        matra_thickness: spec.matra_thickness,
        body_h: rng.random_range(spec.glyph_h.0..=spec.glyph_h.1),
    };
    let n = spec.alphabet_size;
    let modifiers = ((n as f64 * 0.2).round() as usize).max(1);
    let compounds = ((n as f64 * 0.3).round() as usize).max(1);
    let basics = n - modifiers - compounds;
    let groups = std::iter::repeat_n(Group::Modifier, modifiers)
        .chain(std::iter::repeat_n(Group::Basic, basics))
        .chain(std::iter::repeat_n(Group::Compound, compounds));

    let mut glyphs: Vec<Glyph> = Vec::with_capacity(n);
    for (i, group) in groups.enumerate() {
        let glyph = (0..2000)
            .find_map(|_| {
                let g = draw_glyph(&mut rng, spec, geom, group)?;
                (!glyphs.iter().any(|o| o.image == g.image)).then_some(g)
            })
            .ok_or_else(|| Error::InvalidSpec(format!("could not draw a distinct {} glyph", group.as_str())))?;
        glyphs.push(Glyph {
            label: format!("g{i:02}"),
            ..glyph
        });
    }
    if glyphs.iter().all(|g| g.descender) {
        // keep at least one glyph sitting on the baseline
        let g = &mut glyphs[0];
        let base = geom.baseline_row();
        for y in base + 1..g.image.height() {
            for x in 0..g.image.width() {
                g.image.set(x, y, false);
            }
        }
        g.descender = false;
    }
    Ok((geom, glyphs))
}

fn draw_glyph(rng: &mut ChaCha8Rng, spec: &SynthSpec, geom: Alphabet, group: Group) -> Option<Glyph> {
    let (wlo, whi) = spec.width_band(group);
    let w = rng.random_range(wlo..=whi);
    let bh = geom.body_h;
    let mut body = BinaryImage::new(w, bh, false);

    // stem on one side, with a hooked bar reaching the far side
    let left = rng.random_bool(0.5);
    let stem = if left { 0 } else { w - 1 };
    let far = w - 1 - stem;
    for y in 0..bh {
        body.set(stem, y, true);
    }
    let r = rng.random_range(1..bh - 1);
    for x in 1..w - 1 {
        body.set(x, r, true);
    }
    let k = rng.random_range(1..=(bh / 4).max(1));
    let down = rng.random_bool(0.5);
    for i in 1..=k {
        let y = if down { r + i } else { r.checked_sub(i)? };
        if y >= bh {
            break;
        }
        body.set(far, y, true);
    }
    if !body_ok(&body) {
        return None;
    }

    let extras = match group {
        Group::Modifier => 1,
        Group::Basic => 2,
        Group::Compound => 4,
    };
    let mut added = 0;
    for _ in 0..40 * extras {
        if added == extras {
            break;
        }
        let mut next = body.clone();
        stroke(rng, &mut next);
        if next != body && body_ok(&next) {
            body = next;
            added += 1;
        }
    }
    if added < extras.min(2) {
        return None;
    }

    let ascender = rng.random_bool(spec.ascender_prob);
    let descender = rng.random_bool(spec.descender_prob);
    let mut image = BinaryImage::new(w, geom.glyph_height(), false);
    let matra = geom.matra_rows();
    for y in matra.start..=matra.end {
        for x in 0..w {
            image.set(x, y, true);
        }
    }
    image.blit(&body, 0, matra.end + 1);
    if ascender {
        let x = rng.random_range(0..w);
        let len = rng.random_range(2..=3);
        for y in ASCENDER_ROWS - len..ASCENDER_ROWS {
            image.set(x, y, true);
        }
    }
    if descender {
        let len = rng.random_range(2..=DESCENDER_ROWS);
        let base = geom.baseline_row();
        for y in base + 1..=base + len {
            image.set(stem, y, true);
        }
    }
    if !splits_as_one(&image, geom) {
        return None;
    }
    Some(Glyph {
        label: String::new(),
        group,
        image,
        ascender,
        descender,
    })
}

/// Constraints that keep the headline the strict projection peak and each
/// glyph a single connected character.
fn body_ok(body: &BinaryImage) -> bool {
    let (w, h) = (body.width(), body.height());
    let row_ink = |y: usize| body.row(y).iter().filter(|&&p| p).count();
    let cols_inked = (0..w).all(|x| (0..h).any(|y| body.get(x, y)));
    let rows_ok = (0..h).all(|y| row_ink(y) < w) && 2 * row_ink(0) <= w;
    let touches_base = row_ink(h - 1) > 0;
    let light = 5 * body.count_foreground() < 2 * w * h;
    cols_inked && rows_ok && touches_base && light && label_components(body).len() == 1
}

fn stroke(rng: &mut ChaCha8Rng, g: &mut BinaryImage) {
    let (w, h) = (g.width() as i64, g.height() as i64);
    let line = |g: &mut BinaryImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64)| {
        // Bresenham
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            if (0..w).contains(&x) && (0..h).contains(&y) {
                g.set(x as usize, y as usize, true);
            }
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    };
    let pt = |rng: &mut ChaCha8Rng| (rng.random_range(0..w), rng.random_range(1..h));
    match rng.random_range(0..5) {
        0 => {
            // vertical bar
            let (x, y) = pt(rng);
            let len = rng.random_range(2..=(h / 2).max(2));
            line(g, (x, y), (x, (y + len - 1).min(h - 1)));
        }
        1 => {
            // horizontal bar
            let (x, y) = pt(rng);
            let len = rng.random_range(2..=(w - 1).max(2));
            line(g, (x, y), ((x + len - 1).min(w - 1), y));
        }
        2 => {
            // slant
            let a = pt(rng);
            let b = pt(rng);
            line(g, a, b);
        }
        3 => {
            // loop
            let (x, y) = pt(rng);
            let (x1, y1) = ((x + rng.random_range(2..=4)).min(w - 1), (y + rng.random_range(2..=4)).min(h - 1));
            line(g, (x, y), (x1, y));
            line(g, (x1, y), (x1, y1));
            line(g, (x1, y1), (x, y1));
            line(g, (x, y1), (x, y));
        }
        _ => {
            // hook
            let (x, y) = pt(rng);
            let len = rng.random_range(2..=4);
            let x1 = if rng.random_bool(0.5) { x + len } else { x - len };
            line(g, (x, y), (x, (y + len).min(h - 1)));
            line(g, (x, y), (x1.clamp(0, w - 1), y));
        }
    }
}

/// The glyph on its own must come out of character segmentation as one
/// box spanning its full width, for any path deviation bound.
fn splits_as_one(image: &BinaryImage, geom: Alphabet) -> bool {
    let w = image.width();
    let mut padded = BinaryImage::new(w + 2 * GLYPH_SPACING, image.height(), false);
    padded.blit(image, GLYPH_SPACING, 0);
    let matra = geom.matra_rows();
    (0..=w).all(|max_dev| {
        let boxes = extract_characters(&padded, matra, geom.baseline_row(), 1, max_dev);
        boxes.len() == 1 && boxes[0].rect.columns() == Span::new(GLYPH_SPACING, GLYPH_SPACING + w - 1)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    /// Ink column extent of each word over the full line height.
    pub word_boxes: Vec<Rect>,
    /// Ink box of each glyph, per word.
    pub char_boxes: Vec<Vec<Rect>>,
    pub labels: Vec<Vec<String>>,
    pub groups: Vec<Vec<Group>>,
    pub matra_span: Span,
    pub baseline: usize,
}

impl GroundTruth {
    pub fn char_count(&self) -> usize {
        self.char_boxes.iter().map(Vec::len).sum()
    }

    /// Blank column runs between consecutive words.
    pub fn gaps(&self) -> Vec<Span> {
        self.word_boxes
            .windows(2)
            .map(|p| Span::new(p[0].x1() + 1, p[1].x0 - 1))
            .collect()
    }
}

/// Renders line `index` of the corpus described by `spec`.
pub fn render_line(
    spec: &SynthSpec,
    geom: Alphabet,
    glyphs: &[Glyph],
    index: u64,
) -> (GrayImage, GroundTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);

    let n_words = rng.random_range(spec.words.0..=spec.words.1);
    let mut words: Vec<Vec<usize>> = (0..n_words)
        .map(|_| {
            let n = rng.random_range(spec.glyphs_per_word.0..=spec.glyphs_per_word.1);
            (0..n).map(|_| rng.random_range(0..glyphs.len())).collect()
        })
        .collect();
    // more glyphs on the baseline than below it, so the baseline vote is unambiguous
    let sitting: Vec<usize> = (0..glyphs.len()).filter(|&i| !glyphs[i].descender).collect();
    loop {
        let desc = words.iter().flatten().filter(|&&g| glyphs[g].descender).count();
        let total: usize = words.iter().map(Vec::len).sum();
        if 2 * desc < total {
            break;
        }
        let slot = words.iter_mut().flatten().find(|g| glyphs[**g].descender).expect("a descender slot");
        *slot = *sitting.choose(&mut rng).expect("alphabet has a sitting glyph");
    }
    let gaps: Vec<usize> = (1..n_words)
        .map(|_| rng.random_range(spec.gap_width.0..=spec.gap_width.1))
        .collect();

    let word_w = |w: &[usize]| {
        w.iter().map(|&g| glyphs[g].image.width()).sum::<usize>() + GLYPH_SPACING * (w.len() - 1)
    };
    let width = 2 * MARGIN_X + words.iter().map(|w| word_w(w)).sum::<usize>() + gaps.iter().sum::<usize>();
    let height = 2 * MARGIN_Y + geom.glyph_height();
    let mut mask = BinaryImage::new(width, height, false);
    let matra = geom.matra_rows();
    let mut truth = GroundTruth {
        width,
        height,
        word_boxes: Vec::new(),
        char_boxes: Vec::new(),
        labels: Vec::new(),
        groups: Vec::new(),
        matra_span: Span::new(MARGIN_Y + matra.start, MARGIN_Y + matra.end),
        baseline: MARGIN_Y + geom.baseline_row(),
    };

    let mut x = MARGIN_X;
    for (wi, word) in words.iter().enumerate() {
        let x_start = x;
        let (mut boxes, mut labels, mut groups) = (Vec::new(), Vec::new(), Vec::new());
        for (gi, &g) in word.iter().enumerate() {
            let glyph = &glyphs[g];
            mask.blit(&glyph.image, x, MARGIN_Y);
            let ink = glyph.image.foreground_bbox().expect("glyphs have ink");
            boxes.push(Rect::new(x + ink.x0, MARGIN_Y + ink.y0, ink.w, ink.h));
            labels.push(glyph.label.clone());
            groups.push(glyph.group);
            x += glyph.image.width();
            if gi + 1 < word.len() {
                for y in truth.matra_span.start..=truth.matra_span.end {
                    for s in x..x + GLYPH_SPACING {
                        mask.set(s, y, true);
                    }
                }
                x += GLYPH_SPACING;
            }
        }
        truth.word_boxes.push(Rect::new(x_start, 0, x - x_start, height));
        truth.char_boxes.push(boxes);
        truth.labels.push(labels);
        truth.groups.push(groups);
        if wi < gaps.len() {
            x += gaps[wi];
        }
    }

    let (ink, ground) = match spec.polarity {
        Polarity::DarkOnLight => (INK, GROUND),
        Polarity::LightOnDark => (GROUND, INK),
    };
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("valid sigma"));
    let mut img = GrayImage::new(width, height, ground);
    for y in 0..height {
        for x in 0..width {
            let mut v = if mask.get(x, y) { ink } else { ground } as f64;
            v += spec.background_ramp * x as f64 / (width - 1).max(1) as f64;
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            img.set(x, y, v.round().clamp(0.0, 255.0) as u8);
        }
    }
    (img, truth)
}

/// Line 0 of the corpus for `spec`.
pub fn generate_line(spec: &SynthSpec) -> Result<(GrayImage, GroundTruth)> {
    let (geom, glyphs) = generate_alphabet(spec)?;
    Ok(render_line(spec, geom, &glyphs, 0))
}

/// `lines` lines in index order; rendered in parallel.
pub fn generate_corpus(spec: &SynthSpec, lines: usize) -> Result<Vec<(GrayImage, GroundTruth)>> {
    let (geom, glyphs) = generate_alphabet(spec)?;
    Ok((0..lines as u64)
        .into_par_iter()
        .map(|i| render_line(spec, geom, &glyphs, i))
        .collect())
}
