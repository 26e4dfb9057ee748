//! Raster types, decoding and cropping.
//!
//! Every stage of the pipeline passes [`GrayImage`] or [`BinaryImage`]
//! values around. Both are row-major [`Raster`]s; foreground is `true`.

use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle in pixel coordinates, `w` and `h` at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Rect { x0, y0, w, h }
    }

    /// Rectangle covering columns `x_first..=x_last` and rows `y_first..=y_last`.
    pub fn from_inclusive(x_first: usize, y_first: usize, x_last: usize, y_last: usize) -> Self {
        Rect {
            x0: x_first,
            y0: y_first,
            w: x_last - x_first + 1,
            h: y_last - y_first + 1,
        }
    }

    pub fn x1(&self) -> usize {
        self.x0 + self.w - 1
    }

    pub fn y1(&self) -> usize {
        self.y0 + self.h - 1
    }

    pub fn columns(&self) -> Span {
        Span::new(self.x0, self.x1())
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.x0 + self.w <= width && self.y0 + self.h <= height
    }

    /// `inner` expressed relative to `self`, mapped back to the outer frame.
    pub fn compose(&self, inner: Rect) -> Rect {
        Rect::new(self.x0 + inner.x0, self.y0 + inner.y0, inner.w, inner.h)
    }
}

/// Inclusive index interval `[start, end]` over rows or columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    /// Size of the intersection divided by the size of the union.
    pub fn iou(&self, other: &Span) -> f64 {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if lo > hi {
            return 0.0;
        }
        let inter = (hi - lo + 1) as f64;
        let union = (self.len() + other.len()) as f64 - inter;
        inter / union
    }
}

/// Row-major 2-D pixel grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
}

pub type GrayImage = Raster<u8>;
pub type BinaryImage = Raster<bool>;

impl<T: Copy> Raster<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Raster {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(width, height, pixels.len(), 1));
        }
        Ok(Raster {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    /// Copy of the pixels under `r`.
    pub fn crop(&self, r: Rect) -> Result<Self> {
        if !r.fits(self.width, self.height) {
            return Err(Error::OutOfBounds {
                rect: r,
                width: self.width,
                height: self.height,
            });
        }
        let mut pixels = Vec::with_capacity(r.w * r.h);
        for y in r.y0..r.y0 + r.h {
            let start = y * self.width + r.x0;
            pixels.extend_from_slice(&self.pixels[start..start + r.w]);
        }
        Ok(Raster {
            width: r.w,
            height: r.h,
            pixels,
        })
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Writes `src` with its top-left corner at `(x0, y0)`. Panics when `src` does not fit.
    pub fn blit(&mut self, src: &Raster<T>, x0: usize, y0: usize) {
        assert!(x0 + src.width <= self.width && y0 + src.height <= self.height);
        for y in 0..src.height {
            let dst = (y0 + y) * self.width + x0;
            self.pixels[dst..dst + src.width].copy_from_slice(src.row(y));
        }
    }
}

impl BinaryImage {
    pub fn count_foreground(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.pixels.iter().any(|&p| p)
    }

    /// Tight bounding box of the foreground, `None` when blank.
    pub fn foreground_bbox(&self) -> Option<Rect> {
        let mut x_min = usize::MAX;
        let mut x_max = 0;
        let mut y_min = usize::MAX;
        let mut y_max = 0;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x_min = x_min.min(x);
                    x_max = x_max.max(x);
                    y_min = y_min.min(y);
                    y_max = y_max.max(y);
                }
            }
        }
        (x_min != usize::MAX).then(|| Rect::from_inclusive(x_min, y_min, x_max, y_max))
    }
}

/// ITU-R BT.601 luma, rounded to nearest.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Decodes a PNG or binary PGM (P5, maxval 255) payload into grayscale.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.first() == Some(&0x89) {
        if bytes.len() < PNG_SIGNATURE.len() || bytes[..8] != PNG_SIGNATURE {
            return Err(Error::Decode("truncated or corrupt PNG signature".into()));
        }
        return decode_png(bytes);
    }
    if bytes.starts_with(b"P5") {
        return decode_pgm(bytes);
    }
    Err(Error::UnsupportedFormat)
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| to_grayscale(p[0], p[1], p[2]))
            .collect(),
    };
    GrayImage::from_vec(width, height, pixels)
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Decode("malformed PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Decode("PGM header value out of range".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Decode(format!("PGM maxval {maxval} unsupported, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Decode("PGM has zero extent".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::Decode("malformed PGM header".into()));
    }
    pos += 1;
    let data = &bytes[pos..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Decode("PGM dimensions overflow".into()))?;
    if data.len() < n {
        return Err(Error::Decode(format!(
            "PGM raster truncated: {} of {n} bytes",
            data.len()
        )));
    }
    GrayImage::from_vec(width, height, data[..n].to_vec())
}

/// Binary PGM (P5) encoding.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn encode_png_gray(img: &GrayImage) -> Result<Vec<u8>> {
    encode_png(img.pixels(), img.width(), img.height(), image::ExtendedColorType::L8)
}

/// PNG from interleaved RGB bytes.
pub fn encode_png_rgb(rgb: &[u8], width: usize, height: usize) -> Result<Vec<u8>> {
    encode_png(rgb, width, height, image::ExtendedColorType::Rgb8)
}

fn encode_png(
    data: &[u8],
    width: usize,
    height: usize,
    color: image::ExtendedColorType,
) -> Result<Vec<u8>> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(Cursor::new(&mut out))
        .write_image(data, width as u32, height as u32, color)
        .map_err(|e| Error::Decode(e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grayscale_weights() {
        assert_eq!(to_grayscale(0, 0, 0), 0);
        assert_eq!(to_grayscale(255, 255, 255), 255);
        assert_eq!(to_grayscale(255, 0, 0), 76);
        assert_eq!(to_grayscale(0, 255, 0), 150);
        assert_eq!(to_grayscale(0, 0, 255), 29);
    }

    #[test]
    fn pgm_single_pixel() {
        let img = decode_image(b"P5\n1 1\n255\n\x80").unwrap();
        assert_eq!((img.width(), img.height(), img.pixels()), (1, 1, &[128u8][..]));
    }

    #[test]
    fn pgm_with_comment() {
        let img = decode_image(b"P5 # made by hand\n2 1 255\n\x01\x02").unwrap();
        assert_eq!(img.pixels(), &[1, 2]);
    }

    #[test]
    fn pgm_rejects_other_maxval_and_short_raster() {
        assert!(matches!(decode_image(b"P5\n1 1\n65535\n\0\0"), Err(Error::Decode(_))));
        assert!(matches!(decode_image(b"P5\n2 2\n255\n\0"), Err(Error::Decode(_))));
    }

    #[test]
    fn png_white() {
        let white = GrayImage::new(2, 2, 255);
        let bytes = encode_png_gray(&white).unwrap();
        assert_eq!(decode_image(&bytes).unwrap(), white);
    }

    #[test]
    fn png_color_goes_through_luma() {
        let rgb = [255, 0, 0, 0, 255, 0];
        let bytes = encode_png_rgb(&rgb, 2, 1).unwrap();
        assert_eq!(decode_image(&bytes).unwrap().pixels(), &[76, 150]);
    }

    #[test]
    fn truncated_png_header() {
        assert!(matches!(decode_image(&PNG_SIGNATURE[..4]), Err(Error::Decode(_))));
        let mut bytes = encode_png_gray(&GrayImage::new(3, 3, 7)).unwrap();
        bytes.truncate(20);
        assert!(matches!(decode_image(&bytes), Err(Error::Decode(_))));
    }

    #[test]
    fn unsupported_format() {
        assert!(matches!(decode_image(b"GIF89a"), Err(Error::UnsupportedFormat)));
        assert!(matches!(decode_image(b""), Err(Error::UnsupportedFormat)));
    }

    #[test]
    fn crop_cases() {
        let img = GrayImage::from_fn(3, 3, |x, y| (y * 3 + x) as u8);
        assert_eq!(img.crop(img.full_rect()).unwrap(), img);
        assert_eq!(img.crop(Rect::new(1, 1, 1, 1)).unwrap().pixels(), &[4]);
        assert!(matches!(
            img.crop(Rect::new(2, 2, 5, 5)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn span_iou() {
        assert_eq!(Span::new(0, 9).iou(&Span::new(0, 9)), 1.0);
        assert_eq!(Span::new(0, 4).iou(&Span::new(5, 9)), 0.0);
        assert!((Span::new(0, 9).iou(&Span::new(2, 9)) - 0.8).abs() < 1e-12);
    }

    fn gray_image() -> impl Strategy<Value = GrayImage> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |px| GrayImage::from_vec(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pgm_round_trip(img in gray_image()) {
            let once = decode_image(&encode_pgm(&img)).unwrap();
            prop_assert_eq!(&once, &img);
            prop_assert_eq!(encode_pgm(&once), encode_pgm(&img));
        }

        #[test]
        fn crop_composes((img, ra, rb) in gray_image().prop_flat_map(|img| {
            let (w, h) = (img.width(), img.height());
            (0..w, 0..h).prop_flat_map(move |(x0, y0)| {
                let img = img.clone();
                (1..=w - x0, 1..=h - y0).prop_flat_map(move |(rw, rh)| {
                    let img = img.clone();
                    let ra = Rect::new(x0, y0, rw, rh);
                    (0..rw, 0..rh).prop_flat_map(move |(bx, by)| {
                        let img = img.clone();
                        (1..=rw - bx, 1..=rh - by)
                            .prop_map(move |(bw, bh)| (img.clone(), ra, Rect::new(bx, by, bw, bh)))
                    })
                })
            })
        })) {
            let twice = img.crop(ra).unwrap().crop(rb).unwrap();
            prop_assert_eq!(twice, img.crop(ra.compose(rb)).unwrap());
        }
    }
}
