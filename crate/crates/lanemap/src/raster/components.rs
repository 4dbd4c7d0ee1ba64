//! Connected-component labeling over binary masks.

use super::{BinaryMask, NEIGHBORS_4, NEIGHBORS_8};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// One labeled component. `label` indexes into the label raster (1-based;
/// 0 is background).
#[derive(Debug, Clone)]
pub struct Component {
    pub label: u32,
    pub pixel_count: usize,
    /// Inclusive bounds (min_x, min_y, max_x, max_y).
    pub bbox: (usize, usize, usize, usize),
    pub pixels: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct ComponentSet {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    components: Vec<Component>,
}

impl ComponentSet {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Binary mask of a single component.
    pub fn component_mask(&self, label: u32) -> BinaryMask {
        let mut out = BinaryMask::empty(self.width, self.height);
        let comp = &self.components[label as usize - 1];
        for &(x, y) in &comp.pixels {
            out.set(x, y, true);
        }
        out
    }

    /// Retains components with `min_px <= size <= max_px`; labels re-densified
    /// in raster-scan order of each component's first pixel.
    pub fn filter_by_size(&self, min_px: usize, max_px: usize) -> ComponentSet {
        assert!(min_px <= max_px, "min_px must not exceed max_px");
        let mut labels = vec![0u32; self.width * self.height];
        let mut components = Vec::new();
        for comp in &self.components {
            if comp.pixel_count < min_px || comp.pixel_count > max_px {
                continue;
            }
            let new_label = components.len() as u32 + 1;
            for &(x, y) in &comp.pixels {
                labels[y * self.width + x] = new_label;
            }
            components.push(Component {
                label: new_label,
                ..comp.clone()
            });
        }
        ComponentSet {
            width: self.width,
            height: self.height,
            labels,
            components,
        }
    }
}

/// Labels the maximal connected regions of set pixels. Components come out in
/// raster-scan order of their first pixel, so labeling is deterministic.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> ComponentSet {
    let (width, height) = (mask.width(), mask.height());
    let offsets: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &NEIGHBORS_4,
        Connectivity::Eight => &NEIGHBORS_8,
    };
    let mut labels = vec![0u32; width * height];
    let mut components = Vec::new();
    let mut stack = Vec::new();

    for start_y in 0..height {
        for start_x in 0..width {
            if !mask.get(start_x, start_y) || labels[start_y * width + start_x] != 0 {
                continue;
            }
            let label = components.len() as u32 + 1;
            let mut pixels = Vec::new();
            let (mut min_x, mut min_y, mut max_x, mut max_y) = (start_x, start_y, start_x, start_y);
            labels[start_y * width + start_x] = label;
            stack.push((start_x, start_y));
            while let Some((x, y)) = stack.pop() {
                pixels.push((x, y));
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
                for &(dx, dy) in offsets {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if mask.get(nx, ny) && labels[ny * width + nx] == 0 {
                        labels[ny * width + nx] = label;
                        stack.push((nx, ny));
                    }
                }
            }
            pixels.sort_unstable_by_key(|&(x, y)| (y, x));
            components.push(Component {
                label,
                pixel_count: pixels.len(),
                bbox: (min_x, min_y, max_x, max_y),
                pixels,
            });
        }
    }
    ComponentSet {
        width,
        height,
        labels,
        components,
    }
}
