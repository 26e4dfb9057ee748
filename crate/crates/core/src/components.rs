//! 8-connected component labeling and area-based noise rejection.

use crate::imaging::{BinaryImage, Raster, Rect};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: u32,
    pub area: usize,
    pub bbox: Rect,
    /// Row of the component's lowermost foreground pixel.
    pub lowest_row: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSet {
    /// Component id per pixel, 0 for background.
    pub labels: Raster<u32>,
    /// Indexed by `id - 1`.
    pub components: Vec<Component>,
}

impl ComponentSet {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Labels 8-connected foreground components. Ids start at 1 and follow
/// raster-scan order of each component's first pixel.
pub fn label_components(bin: &BinaryImage) -> ComponentSet {
    let (w, h) = (bin.width(), bin.height());
    let mut labels = Raster::new(w, h, 0u32);
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !bin.get(x0, y0) || labels.get(x0, y0) != 0 {
                continue;
            }
            let id = components.len() as u32 + 1;
            labels.set(x0, y0, id);
            stack.push((x0, y0));
            let (mut x_min, mut x_max, mut y_max) = (x0, x0, y0);
            let mut area = 0;
            while let Some((x, y)) = stack.pop() {
                area += 1;
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_max = y_max.max(y);
                for (dx, dy) in NEIGHBORS {
                    let (Some(nx), Some(ny)) = (x.checked_add_signed(dx), y.checked_add_signed(dy))
                    else {
                        continue;
                    };
                    if nx < w && ny < h && bin.get(nx, ny) && labels.get(nx, ny) == 0 {
                        labels.set(nx, ny, id);
                        stack.push((nx, ny));
                    }
                }
            }
            components.push(Component {
                id,
                area,
                // the first pixel in raster order is on the top row
                bbox: Rect::from_inclusive(x_min, y0, x_max, y_max),
                lowest_row: y_max,
            });
        }
    }
    ComponentSet { labels, components }
}

/// Erases components whose area is below 2% of the mean component area.
pub fn remove_noise(bin: &BinaryImage, cs: &ComponentSet) -> BinaryImage {
    if cs.is_empty() {
        return bin.clone();
    }
    let total: usize = cs.components.iter().map(|c| c.area).sum();
    let count = cs.len();
    // area < 0.02 * total / count, kept in integers
    let noise: Vec<bool> = cs
        .components
        .iter()
        .map(|c| c.area * 50 * count < total)
        .collect();
    let mut out = bin.clone();
    for (i, &id) in cs.labels.pixels().iter().enumerate() {
        if id != 0 && noise[id as usize - 1] {
            out.set(i % bin.width(), i / bin.width(), false);
        }
    }
    out
}

/// Labels and denoises in one step.
pub fn denoise(bin: &BinaryImage) -> BinaryImage {
    remove_noise(bin, &label_components(bin))
}
