//! Shape features of a segmented character.

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, Span};

pub const GRID: usize = 5;
pub const DIRECTIONS: usize = 4;
pub const CONTOUR_DIMS: usize = GRID * GRID * DIRECTIONS;

/// Direction bins of the contour histogram, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Horizontal = 0,
    Vertical = 1,
    /// Up-right / down-left neighbours.
    Diagonal45 = 2,
    /// Down-right / up-left neighbours.
    Diagonal135 = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Width over height of the ink inside the middle zone.
    pub f1: f64,
    /// Row of the leftmost ink pixel, relative to the bounding box height.
    pub f2: f64,
    /// Column of the lowermost ink pixel, relative to the bounding box width.
    pub f3: f64,
    /// Row of the rightmost ink pixel, relative to the bounding box height.
    pub f4: f64,
    /// Longest headline run inside the bounding box over the box width.
    pub f5: f64,
    /// Ink runs on the row just below the headline.
    pub f6: f64,
    /// Longest vertical run over the box height.
    pub f7a: f64,
    /// Column of that run over the box width.
    pub f7b: f64,
    /// 5x5 cells x 4 directions contour histogram, cell-major.
    pub f8: [f64; CONTOUR_DIMS],
}

impl FeatureVector {
    /// The eight scalar features `[f1, f2, f3, f4, f5, f6, f7a, f7b]`.
    pub fn scalars(&self) -> [f64; 8] {
        [
            self.f1, self.f2, self.f3, self.f4, self.f5, self.f6, self.f7a, self.f7b,
        ]
    }

    pub fn contour_bin(&self, cell_x: usize, cell_y: usize, dir: Direction) -> f64 {
        self.f8[(cell_y * GRID + cell_x) * DIRECTIONS + dir as usize]
    }
}

/// Computes all features of a character image whose rows share the
/// coordinates of its text line.
pub fn extract_features(ch: &BinaryImage, matra: Span, baseline: usize) -> Result<FeatureVector> {
    let bbox = ch.foreground_bbox().ok_or(Error::BlankCharacter)?;
    let (x0, y0, w, h) = (bbox.x0, bbox.y0, bbox.w as f64, bbox.h as f64);
    let cols = bbox.x0..=bbox.x1();
    let rows = bbox.y0..=bbox.y1();

    let mid_lo = (matra.end + 1).max(bbox.y0);
    let mid_hi = baseline.min(bbox.y1());
    let mut mid: Option<(usize, usize, usize, usize)> = None;
    for y in mid_lo..=mid_hi {
        for x in cols.clone() {
            if ch.get(x, y) {
                let m = mid.get_or_insert((x, x, y, y));
                m.0 = m.0.min(x);
                m.1 = m.1.max(x);
                m.2 = m.2.min(y);
                m.3 = m.3.max(y);
            }
        }
    }
    let f1 = match mid {
        Some((xa, xb, ya, yb)) => (xb - xa + 1) as f64 / (yb - ya + 1) as f64,
        None => w / h,
    };

    let first_in_col = |x: usize| rows.clone().find(|&y| ch.get(x, y)).unwrap_or(y0);
    let f2 = (first_in_col(bbox.x0) - y0) as f64 / h;
    let f4 = (first_in_col(bbox.x1()) - y0) as f64 / h;
    let bottom_x = cols.clone().find(|&x| ch.get(x, bbox.y1())).unwrap_or(x0);
    let f3 = (bottom_x - x0) as f64 / w;

    let longest_row_run = |y: usize| longest_run(cols.clone().map(|x| ch.get(x, y)));
    let f5 = (matra.start..=matra.end.min(ch.height() - 1))
        .map(longest_row_run)
        .max()
        .unwrap_or(0) as f64
        / w;

    let below = matra.end + 1;
    let f6 = if below < ch.height() {
        count_runs(cols.clone().map(|x| ch.get(x, below))) as f64
    } else {
        0.0
    };

    let (mut best_len, mut best_x) = (0, x0);
    for x in cols.clone() {
        let len = longest_run(rows.clone().map(|y| ch.get(x, y)));
        if len > best_len {
            best_len = len;
            best_x = x;
        }
    }

    Ok(FeatureVector {
        f1,
        f2,
        f3,
        f4,
        f5,
        f6,
        f7a: best_len as f64 / h,
        f7b: (best_x - x0) as f64 / w,
        f8: contour_directional(ch)?,
    })
}

fn longest_run(it: impl Iterator<Item = bool>) -> usize {
    let (mut best, mut cur) = (0, 0);
    for p in it {
        cur = if p { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

fn count_runs(it: impl Iterator<Item = bool>) -> usize {
    let mut prev = false;
    let mut n = 0;
    for p in it {
        if p && !prev {
            n += 1;
        }
        prev = p;
    }
    n
}

/// Directional histogram of the character contour over a 5x5 grid laid on
/// the ink bounding box.
///
/// A contour pixel is ink with at least one 8-neighbour that is background
/// (anything outside the bounding box counts as background). Each contour
/// pixel votes once for every axis along which it has a contour neighbour.
pub fn contour_directional(ch: &BinaryImage) -> Result<[f64; CONTOUR_DIMS]> {
    let bbox = ch.foreground_bbox().ok_or(Error::BlankCharacter)?;
    let glyph = ch.crop(bbox)?;
    let (w, h) = (glyph.width() as isize, glyph.height() as isize);
    let ink = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && glyph.get(x as usize, y as usize);
    let on_contour = |x: isize, y: isize| {
        ink(x, y)
            && (-1..=1).any(|dy| (-1..=1).any(|dx| (dx, dy) != (0, 0) && !ink(x + dx, y + dy)))
    };
    const AXES: [[(isize, isize); 2]; 4] = [
        [(1, 0), (-1, 0)],
        [(0, 1), (0, -1)],
        [(1, -1), (-1, 1)],
        [(1, 1), (-1, -1)],
    ];
    let mut hist = [0.0; CONTOUR_DIMS];
    for y in 0..h {
        for x in 0..w {
            if !on_contour(x, y) {
                continue;
            }
            let cell_x = x as usize * GRID / w as usize;
            let cell_y = y as usize * GRID / h as usize;
            let base = (cell_y * GRID + cell_x) * DIRECTIONS;
            for (dir, axis) in AXES.iter().enumerate() {
                if axis.iter().any(|&(dx, dy)| on_contour(x + dx, y + dy)) {
                    hist[base + dir] += 1.0;
                }
            }
        }
    }
    Ok(hist)
}
