//! Class-indexed rasters and the low-level binary-mask operations the
//! vectorization pipeline is built from: masking, connected components,
//! thinning and contour tracing.
//!
//! Connectivity convention throughout: foreground is 8-connected, background
//! is 4-connected.

mod components;
mod contour;
mod io;
mod skeleton;

pub use components::{connected_components, Component, ComponentSet, Connectivity};
pub use contour::{trace_contours, Contour, ContourKind};
pub use io::{load_mask_png, save_mask_png, save_rgb_png};
#[doc(hidden)]
pub use skeleton::skeletonize_passes;
pub use skeleton::{is_thin, skeletonize};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("invalid class id {0} (valid ids are 0..=8)")]
    InvalidClassId(u8),
    #[error("mask dimensions must be positive, got {width}x{height}")]
    EmptyMask { width: usize, height: usize },
    #[error("data length {len} does not match {width}x{height}")]
    DataLengthMismatch {
        len: usize,
        width: usize,
        height: usize,
    },
    #[error("pixel ({x}, {y}) outside {width}x{height} raster")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("mask is not 1-pixel thin at ({x}, {y})")]
    NotThin { x: usize, y: usize },
    #[error("png: {0}")]
    Png(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Semantic classes of the segmentation catalogue. Ids are dense, stable and
/// shared with the on-disk mask encoding; `Vehicle` marks occlusions during
/// annotation and is never emitted by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Class {
    Irrelevant = 0,
    Road = 1,
    Walkway = 2,
    Vegetation = 3,
    Parking = 4,
    TrafficIsland = 5,
    Symbol = 6,
    LaneMarking = 7,
    Vehicle = 8,
}

impl Class {
    pub const COUNT: usize = 9;

    pub const ALL: [Class; Class::COUNT] = [
        Class::Irrelevant,
        Class::Road,
        Class::Walkway,
        Class::Vegetation,
        Class::Parking,
        Class::TrafficIsland,
        Class::Symbol,
        Class::LaneMarking,
        Class::Vehicle,
    ];

    /// Classes a vehicle can drive on; the source of the drivable-area mask.
    pub const DRIVABLE: [Class; 3] = [Class::Road, Class::LaneMarking, Class::Symbol];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Class, RasterError> {
        Class::ALL
            .get(id as usize)
            .copied()
            .ok_or(RasterError::InvalidClassId(id))
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Irrelevant => "irrelevant",
            Class::Road => "road",
            Class::Walkway => "walkway",
            Class::Vegetation => "vegetation",
            Class::Parking => "parking",
            Class::TrafficIsland => "traffic_island",
            Class::Symbol => "symbol",
            Class::LaneMarking => "lane_marking",
            Class::Vehicle => "vehicle",
        }
    }
}

/// Row-major class-id raster; the pipeline's sole perceptual input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl SemanticMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyMask { width, height });
        }
        if data.len() != width * height {
            return Err(RasterError::DataLengthMismatch {
                len: data.len(),
                width,
                height,
            });
        }
        if let Some(&bad) = data.iter().find(|&&v| v as usize >= Class::COUNT) {
            return Err(RasterError::InvalidClassId(bad));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, class: Class) -> Result<Self, RasterError> {
        Self::new(width, height, vec![class.id(); width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn class_at(&self, x: usize, y: usize) -> Class {
        debug_assert!(x < self.width && y < self.height);
        Class::ALL[self.data[y * self.width + x] as usize]
    }

    /// Class at a pixel, or `None` outside the raster. Everything outside is
    /// background for the pipeline.
    pub fn class_at_checked(&self, x: i64, y: i64) -> Option<Class> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.class_at(x as usize, y as usize))
        }
    }

    pub fn set_class(&mut self, x: usize, y: usize, class: Class) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = class.id();
    }

    pub fn count_class(&self, class: Class) -> usize {
        self.data.iter().filter(|&&v| v == class.id()).count()
    }
}

/// Boolean raster with the same dimensions as the mask it was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Out-of-raster pixels read as background.
    #[inline]
    pub fn get_checked(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            false
        } else {
            self.get(x as usize, y as usize)
        }
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Pixelwise OR; both masks must share dimensions.
    pub fn or(&self, other: &BinaryMask) -> BinaryMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a || b)
                .collect(),
        }
    }

    /// True iff every set pixel of `self` is set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// Eight neighbor offsets, clockwise from north.
pub(crate) const NEIGHBORS_8: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

pub(crate) const NEIGHBORS_4: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

/// Binary mask that is true exactly where the semantic class is in `classes`.
pub fn class_mask(mask: &SemanticMask, classes: &[Class]) -> BinaryMask {
    let mut member = [false; Class::COUNT];
    for c in classes {
        member[c.id() as usize] = true;
    }
    BinaryMask {
        width: mask.width,
        height: mask.height,
        data: mask.data.iter().map(|&v| member[v as usize]).collect(),
    }
}

/// Majority vote over each pixel's 3x3 neighborhood, repeated `passes`
/// times. Reverts isolated boundary flips in predicted segmentations while
/// structures of three or more pixels width keep their shape (their edge
/// rows still see a 6-of-9 majority). Ties keep the center pixel's class.
pub fn majority_filter(mask: &SemanticMask, passes: usize) -> SemanticMask {
    let (w, h) = (mask.width(), mask.height());
    let mut current = mask.clone();
    for _ in 0..passes {
        let mut next = current.clone();
        for y in 0..h {
            for x in 0..w {
                let mut counts = [0u8; Class::COUNT];
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if let Some(c) = current.class_at_checked(x as i64 + dx, y as i64 + dy) {
                            counts[c.id() as usize] += 1;
                        }
                    }
                }
                let own = current.class_at(x, y);
                let mut best = own;
                let mut best_count = counts[own.id() as usize];
                for class in Class::ALL {
                    if counts[class.id() as usize] > best_count {
                        best = class;
                        best_count = counts[class.id() as usize];
                    }
                }
                if best != own {
                    next.set_class(x, y, best);
                }
            }
        }
        current = next;
    }
    current
}

/// Number of set pixels among the 8 neighbors of `p`.
pub fn neighbor_count(mask: &BinaryMask, x: usize, y: usize) -> Result<u32, RasterError> {
    if x >= mask.width || y >= mask.height {
        return Err(RasterError::OutOfBounds {
            x: x as i64,
            y: y as i64,
            width: mask.width,
            height: mask.height,
        });
    }
    Ok(NEIGHBORS_8
        .iter()
        .filter(|&&(dx, dy)| mask.get_checked(x as i64 + dx, y as i64 + dy))
        .count() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn catalog_is_dense_and_stable() {
        assert_eq!(Class::COUNT, 9);
        for (i, c) in Class::ALL.iter().enumerate() {
            assert_eq!(c.id() as usize, i);
            assert_eq!(Class::from_id(i as u8).unwrap(), *c);
        }
        assert!(Class::from_id(9).is_err());
        assert_eq!(Class::Road.id(), 1);
        assert_eq!(Class::Symbol.id(), 6);
        assert_eq!(Class::LaneMarking.id(), 7);
        assert_eq!(Class::Vehicle.id(), 8);
    }

    #[test]
    fn semantic_mask_rejects_bad_values() {
        assert!(SemanticMask::new(2, 2, vec![0, 1, 2, 9]).is_err());
        assert!(SemanticMask::new(0, 2, vec![]).is_err());
        assert!(SemanticMask::new(2, 2, vec![0, 1, 2]).is_err());
    }

    #[test]
    fn class_mask_identity_cases() {
        let road = SemanticMask::filled(4, 3, Class::Road).unwrap();
        let all = class_mask(&road, &[Class::Road]);
        assert_eq!(all.count_ones(), 12);
        let none = class_mask(&road, &[Class::Walkway]);
        assert_eq!(none.count_ones(), 0);
    }

    #[test]
    fn class_mask_checkerboard_matches_membership_oracle() {
        let mask = SemanticMask::new(
            4,
            4,
            (0..16u8).map(|i| if i % 2 == 0 { 1 } else { 3 }).collect(),
        )
        .unwrap();
        let selected = [Class::Road, Class::LaneMarking, Class::Symbol];
        let got = class_mask(&mask, &selected);
        for y in 0..4 {
            for x in 0..4 {
                let expect = selected.contains(&mask.class_at(x, y));
                assert_eq!(got.get(x, y), expect, "pixel ({x}, {y})");
            }
        }
    }

    #[test]
    fn neighbor_count_line_cases() {
        let mut line = BinaryMask::empty(5, 3);
        for x in 0..5 {
            line.set(x, 1, true);
        }
        assert_eq!(neighbor_count(&line, 2, 1).unwrap(), 2);
        assert_eq!(neighbor_count(&line, 0, 1).unwrap(), 1);
        assert!(neighbor_count(&line, 5, 1).is_err());
    }

    #[test]
    fn neighbor_count_t_junction() {
        // Three 1-px strokes meeting at (2, 2).
        let mut t = BinaryMask::empty(5, 5);
        for x in 0..5 {
            t.set(x, 2, true);
        }
        for y in 3..5 {
            t.set(2, y, true);
        }
        assert_eq!(neighbor_count(&t, 2, 2).unwrap(), 3);
    }

    proptest! {
        #[test]
        fn class_mask_distributes_over_union(seed in proptest::collection::vec(0u8..9, 64)) {
            let mask = SemanticMask::new(8, 8, seed).unwrap();
            let a = [Class::Road, Class::Walkway];
            let b = [Class::Symbol, Class::LaneMarking];
            let both = [Class::Road, Class::Walkway, Class::Symbol, Class::LaneMarking];
            let lhs = class_mask(&mask, &both);
            let rhs = class_mask(&mask, &a).or(&class_mask(&mask, &b));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
