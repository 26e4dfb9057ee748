//! Absolute-gradient edge maps, global two-class clustering of the edge
//! map, and per-word Otsu binarization.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage, Raster, Rect};

/// Non-negative gradient magnitudes with the dimensions of the source image.
pub type GradientMap = Raster<u16>;

/// `|img(x+1, y) - img(x, y)|`, with the rightmost column zero.
pub fn horizontal_gradient(img: &GrayImage) -> Result<GradientMap> {
    if img.width() < 2 {
        return Err(Error::TooSmall("horizontal gradient needs width >= 2"));
    }
    Ok(forward_difference(img, 1, 0))
}

/// `|img(x, y+1) - img(x, y)|`, with the bottom row zero.
pub fn vertical_gradient(img: &GrayImage) -> Result<GradientMap> {
    if img.height() < 2 {
        return Err(Error::TooSmall("vertical gradient needs height >= 2"));
    }
    Ok(forward_difference(img, 0, 1))
}

fn forward_difference(img: &GrayImage, dx: usize, dy: usize) -> GradientMap {
    let (w, h) = (img.width(), img.height());
    Raster::from_fn(w, h, |x, y| {
        if x + dx < w && y + dy < h {
            img.get(x + dx, y + dy).abs_diff(img.get(x, y)) as u16
        } else {
            0
        }
    })
}

/// Sums the two maps and min-max normalizes the result to `[0, 255]`.
/// A constant sum maps to all zeros.
pub fn combine_and_normalize(gx: &GradientMap, gy: &GradientMap) -> Result<GradientMap> {
    if gx.width() != gy.width() || gx.height() != gy.height() {
        return Err(Error::DimensionMismatch(
            gx.width(),
            gx.height(),
            gy.width(),
            gy.height(),
        ));
    }
    let raw: Vec<u32> = gx
        .pixels()
        .iter()
        .zip(gy.pixels())
        .map(|(&a, &b)| a as u32 + b as u32)
        .collect();
    let min = raw.iter().copied().min().unwrap_or(0);
    let max = raw.iter().copied().max().unwrap_or(0);
    let range = (max - min) as u64;
    let values = raw
        .iter()
        .map(|&v| {
            if range == 0 {
                0
            } else {
                // round(255 * (v - min) / range), halves rounded up
                ((510 * (v - min) as u64 + range) / (2 * range)) as u16
            }
        })
        .collect();
    Raster::from_vec(gx.width(), gx.height(), values)
}

/// Normalized absolute-gradient map of a grayscale line.
pub fn gradient_map(img: &GrayImage) -> Result<GradientMap> {
    combine_and_normalize(&horizontal_gradient(img)?, &vertical_gradient(img)?)
}

/// Exact two-means split of a histogram (`hist[v]` = count of value `v`).
///
/// Returns the largest value `t` of the lower cluster; the upper cluster is
/// every value `> t`. `None` when fewer than two distinct values are present.
/// Among equally good splits the smallest `t` wins.
///
/// Minimizing the pooled within-cluster squared error of a two-way split is
/// the same as maximizing `(S0*N - S*n0)^2 / (n0 * (N - n0))`, where `n0`,
/// `S0` are the count and sum of the lower cluster. That quantity is
/// compared in exact integer arithmetic, so the argmax is reproducible.
pub fn best_split(hist: &[u64]) -> Option<usize> {
    let n: u64 = hist.iter().sum();
    let s: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * c as u128)
        .sum();
    let mut n0 = 0u64;
    let mut s0 = 0u128;
    let mut best: Option<(usize, u128, u128)> = None;
    for (t, &c) in hist.iter().enumerate() {
        n0 += c;
        s0 += t as u128 * c as u128;
        if n0 == 0 || n0 == n {
            continue;
        }
        let d = (s0 * n as u128).abs_diff(s * n0 as u128);
        let num = d.checked_mul(d).expect("histogram too large for exact split");
        let den = n0 as u128 * (n - n0) as u128;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => cmp_fraction(num, den, bn, bd) == Ordering::Greater,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

/// Exact comparison of `a/b` against `c/d` (`b, d > 0`) without overflow.
fn cmp_fraction(mut a: u128, mut b: u128, mut c: u128, mut d: u128) -> Ordering {
    let mut flipped = false;
    loop {
        let (q1, q2) = (a / b, c / d);
        if q1 != q2 {
            let ord = q1.cmp(&q2);
            return if flipped { ord.reverse() } else { ord };
        }
        let (r1, r2) = (a % b, c % d);
        let ord = match (r1 == 0, r2 == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => {
                // r1/b vs r2/d is the reverse of b/r1 vs d/r2
                (a, b, c, d) = (b, r1, d, r2);
                flipped = !flipped;
                continue;
            }
        };
        return if flipped { ord.reverse() } else { ord };
    }
}

/// Two-means threshold over raw values; see [`best_split`].
pub fn two_means_threshold(values: &[u16]) -> Option<u16> {
    let max = *values.iter().max()? as usize;
    let mut hist = vec![0u64; max + 1];
    for &v in values {
        hist[v as usize] += 1;
    }
    best_split(&hist).map(|t| t as u16)
}

/// Binarizes a gradient map: the higher-mean cluster is foreground.
/// A constant map yields all background.
pub fn kmeans_binarize(gmap: &GradientMap) -> BinaryImage {
    match two_means_threshold(gmap.pixels()) {
        Some(t) => gmap.map(|v| v > t),
        None => gmap.map(|_| false),
    }
}

/// Edge map of a grayscale line: gradient, normalization, clustering.
pub fn edge_map(img: &GrayImage) -> Result<BinaryImage> {
    Ok(kmeans_binarize(&gradient_map(img)?))
}

/// Otsu threshold of the intensities under `region`; pixels `<= t` form the
/// lower class. Ties resolve to the smallest threshold.
pub fn otsu_threshold(img: &GrayImage, region: Rect) -> Result<u8> {
    let crop = img.crop(region)?;
    let mut hist = [0u64; 256];
    for &p in crop.pixels() {
        hist[p as usize] += 1;
    }
    best_split(&hist).map(|t| t as u8).ok_or(Error::Degenerate)
}

/// Binarizes one word region with Otsu's threshold.
///
/// The class with fewer pixels is text, which makes the result independent
/// of polarity. On an exact half/half split the class with the larger mean
/// gradient magnitude wins (the darker class if that ties too). A
/// single-intensity region is all background.
pub fn binarize_word(img: &GrayImage, word: Rect) -> Result<BinaryImage> {
    let crop = img.crop(word)?;
    let t = match otsu_threshold(img, word) {
        Ok(t) => t,
        Err(Error::Degenerate) => return Ok(crop.map(|_| false)),
        Err(e) => return Err(e),
    };
    let upper = crop.pixels().iter().filter(|&&p| p > t).count();
    let lower = crop.pixels().len() - upper;
    let text_is_upper = match upper.cmp(&lower) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            let grad = raw_gradient(&crop);
            let (mut sum_lo, mut sum_hi) = (0u64, 0u64);
            for (&p, &g) in crop.pixels().iter().zip(grad.pixels()) {
                if p > t {
                    sum_hi += g as u64;
                } else {
                    sum_lo += g as u64;
                }
            }
            // equal class sizes, so sums compare like means
            sum_hi > sum_lo
        }
    };
    Ok(crop.map(|p| (p > t) == text_is_upper))
}

/// Unnormalized `grad_x + grad_y`, tolerating one-pixel-wide inputs.
fn raw_gradient(img: &GrayImage) -> GradientMap {
    let gx = forward_difference(img, 1, 0);
    let gy = forward_difference(img, 0, 1);
    Raster::from_fn(img.width(), img.height(), |x, y| gx.get(x, y) + gy.get(x, y))
}
