//! Road-symbol handling: repairing symbol/marking label confusion, cutting
//! symbol masks out of the segmentation, locating their major axis and
//! classifying road arrows.
//!
//! Classification is a pluggable [`SymbolClassifier`]. The built-in baseline
//! normalizes a crop (principal axis up, fixed 64x64 frame) and matches it
//! against procedurally drawn arrow archetypes by normalized cross
//! correlation; anything below the score floor is `Other`. A learned model
//! can replace the baseline without touching the pipeline.

pub mod templates;

use std::path::Path;

use thiserror::Error;

use crate::config::PipelineConfig;
use crate::geometry::{self, Point2};
use crate::georef::GeoReference;
use crate::raster::{
    class_mask, connected_components, load_mask_png, BinaryMask, Class, Connectivity, RasterError,
    SemanticMask,
};

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error("symbol crop is empty")]
    EmptyCrop,
    #[error("single-pixel crop has no major axis")]
    DegenerateCrop,
    #[error("template directory: {0}")]
    TemplateDir(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// The seven road-arrow categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolClass {
    Left,
    Right,
    Straight,
    StraightOrLeft,
    StraightOrRight,
    LeftOrRight,
    Other,
}

impl SymbolClass {
    pub const ALL: [SymbolClass; 7] = [
        SymbolClass::Left,
        SymbolClass::Right,
        SymbolClass::Straight,
        SymbolClass::StraightOrLeft,
        SymbolClass::StraightOrRight,
        SymbolClass::LeftOrRight,
        SymbolClass::Other,
    ];

    /// The six directional classes that have templates.
    pub const DIRECTIONAL: [SymbolClass; 6] = [
        SymbolClass::Left,
        SymbolClass::Right,
        SymbolClass::Straight,
        SymbolClass::StraightOrLeft,
        SymbolClass::StraightOrRight,
        SymbolClass::LeftOrRight,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SymbolClass::Left => "left",
            SymbolClass::Right => "right",
            SymbolClass::Straight => "straight",
            SymbolClass::StraightOrLeft => "straight_or_left",
            SymbolClass::StraightOrRight => "straight_or_right",
            SymbolClass::LeftOrRight => "left_or_right",
            SymbolClass::Other => "other",
        }
    }

    pub fn from_tag(tag: &str) -> Option<SymbolClass> {
        SymbolClass::ALL.into_iter().find(|c| c.tag() == tag)
    }
}

/// A detected symbol: category, major-axis endpoints in UTM metres, the
/// source crop and the classifier confidence.
#[derive(Debug, Clone)]
pub struct Symbol {
    pub class: SymbolClass,
    pub axis: (Point2, Point2),
    pub crop: BinaryMask,
    pub confidence: f64,
}

/// Repairs road arrows partially misclassified as lane markings: over every
/// 8-connected component of symbol-or-marking pixels containing at least one
/// symbol pixel, when symbol is the majority-or-equal share the whole
/// component becomes symbol. All other pixels are untouched.
pub fn reassign_mixed_components(mask: &SemanticMask) -> SemanticMask {
    let combined = class_mask(mask, &[Class::Symbol, Class::LaneMarking]);
    let cs = connected_components(&combined, Connectivity::Eight);
    let mut out = mask.clone();
    for comp in cs.components() {
        let symbol_px = comp
            .pixels
            .iter()
            .filter(|&&(x, y)| mask.class_at(x, y) == Class::Symbol)
            .count();
        if symbol_px == 0 || 2 * symbol_px < comp.pixel_count {
            continue;
        }
        for &(x, y) in &comp.pixels {
            out.set_class(x, y, Class::Symbol);
        }
    }
    out
}

/// A tight crop of one symbol component plus its tile offset.
#[derive(Debug, Clone)]
pub struct SymbolCrop {
    pub crop: BinaryMask,
    /// Tile pixel position of the crop's (0, 0).
    pub offset: (usize, usize),
}

/// One tight bounding-box crop per symbol component.
pub fn extract_symbol_masks(mask: &SemanticMask, min_px: usize) -> Vec<SymbolCrop> {
    let symbol_mask = class_mask(mask, &[Class::Symbol]);
    let cs = connected_components(&symbol_mask, Connectivity::Eight);
    let mut out = Vec::new();
    for comp in cs.components() {
        if comp.pixel_count < min_px {
            continue;
        }
        let (min_x, min_y, max_x, max_y) = comp.bbox;
        let mut crop = BinaryMask::empty(max_x - min_x + 1, max_y - min_y + 1);
        for &(x, y) in &comp.pixels {
            crop.set(x - min_x, y - min_y, true);
        }
        out.push(SymbolCrop {
            crop,
            offset: (min_x, min_y),
        });
    }
    out
}

/// Major-axis endpoints of a crop in UTM metres: the extreme projections of
/// the component pixels onto the first principal axis. Near-isotropic crops
/// (eigenvalue gap ~ 0) fall back to the farthest pixel pair, which picks the
/// diagonal of a square.
pub fn major_axis_endpoints(
    crop: &BinaryMask,
    offset: (usize, usize),
    georef: &GeoReference,
) -> Result<(Point2, Point2), SymbolError> {
    let pts: Vec<Point2> = crop
        .iter_set()
        .map(|(x, y)| {
            georef.pixel_point_to_utm(Point2::new((x + offset.0) as f64, (y + offset.1) as f64))
        })
        .collect();
    if pts.is_empty() {
        return Err(SymbolError::EmptyCrop);
    }
    if pts.len() == 1 {
        return Err(SymbolError::DegenerateCrop);
    }
    let (centroid, mut axis, gap) = geometry::principal_axis(&pts).unwrap();
    let spread = pts
        .iter()
        .map(|p| centroid.distance(p))
        .fold(0.0f64, f64::max)
        .max(georef.gsd);
    if gap < 1e-6 * spread * spread {
        // Isotropic component: use the diameter direction instead, with a
        // lexicographic tie-break for determinism.
        let mut best = (0.0f64, Point2::new(0.0, 0.0), Point2::new(0.0, 0.0));
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = pts[i].distance(&pts[j]);
                if d > best.0 + 1e-12 {
                    best = (d, pts[i], pts[j]);
                }
            }
        }
        let v = Point2::new(best.2.x - best.1.x, best.2.y - best.1.y);
        let len = v.x.hypot(v.y);
        if len > 0.0 {
            axis = Point2::new(v.x / len, v.y / len);
        }
    }
    let (mut min_t, mut max_t) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        let t = (p.x - centroid.x) * axis.x + (p.y - centroid.y) * axis.y;
        min_t = min_t.min(t);
        max_t = max_t.max(t);
    }
    Ok((
        Point2::new(centroid.x + axis.x * min_t, centroid.y + axis.y * min_t),
        Point2::new(centroid.x + axis.x * max_t, centroid.y + axis.y * max_t),
    ))
}

/// Pluggable arrow classifier.
pub trait SymbolClassifier {
    fn classify(&self, crop: &BinaryMask) -> (SymbolClass, f64);
}

const FRAME: usize = 64;
/// Major extent of a normalized shape inside the frame.
const FRAME_EXTENT: f64 = 56.0;
/// Box-pooling factor: correlation runs on a coarse occupancy grid, which
/// forgives the small misalignments occlusion cutouts induce.
const POOL: usize = 4;
const COARSE: usize = FRAME / POOL;

/// A coarse normalized occupancy grid with precomputed statistics for NCC.
#[derive(Debug, Clone)]
struct NormalizedShape {
    cells: Vec<f32>,
    mean: f32,
    norm: f32,
}

impl NormalizedShape {
    fn from_cells(cells: Vec<f32>) -> Self {
        let n = cells.len() as f32;
        let mean = cells.iter().sum::<f32>() / n;
        let norm = cells
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<f32>()
            .sqrt();
        Self { cells, mean, norm }
    }

    fn ncc(&self, other: &NormalizedShape) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let dot: f32 = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(&a, &b)| (a - self.mean) * (b - other.mean))
            .sum();
        (dot / (self.norm * other.norm)) as f64
    }

    /// Best NCC over small grid shifts of `self`; occlusion cutouts move the
    /// centroid, which a fixed-frame correlation would punish.
    fn ncc_shift_search(&self, other: &NormalizedShape, max_shift: i64) -> f64 {
        let mut best = self.ncc(other);
        for sy in -max_shift..=max_shift {
            for sx in -max_shift..=max_shift {
                if sx == 0 && sy == 0 {
                    continue;
                }
                let mut shifted = vec![0.0f32; COARSE * COARSE];
                for y in 0..COARSE as i64 {
                    for x in 0..COARSE as i64 {
                        let (ox, oy) = (x - sx, y - sy);
                        if ox >= 0 && oy >= 0 && (ox as usize) < COARSE && (oy as usize) < COARSE {
                            shifted[(y as usize) * COARSE + x as usize] =
                                self.cells[(oy as usize) * COARSE + ox as usize];
                        }
                    }
                }
                let score = NormalizedShape::from_cells(shifted).ncc(other);
                if score > best {
                    best = score;
                }
            }
        }
        best
    }
}

/// Rotation/scale normalization: principal axis turned to +y plus `jitter`
/// radians, major extent scaled to [`FRAME_EXTENT`] times `scale_adjust`,
/// centroid at the frame center, nearest-neighbor sampled.
fn normalize_crop(
    crop: &BinaryMask,
    jitter: f64,
    base_rot: f64,
    scale_adjust: f64,
) -> Option<NormalizedShape> {
    let pts: Vec<Point2> = crop
        .iter_set()
        .map(|(x, y)| Point2::new(x as f64, y as f64))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (centroid, axis, _) = geometry::principal_axis(&pts)?;
    let angle = axis.y.atan2(axis.x) + base_rot;
    // Rotate by (pi/2 - angle) so the axis lands on +y, then add jitter.
    let rot = std::f64::consts::FRAC_PI_2 - angle + jitter;
    let (sin, cos) = rot.sin_cos();
    let (mut min_t, mut max_t) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        let dx = p.x - centroid.x;
        let dy = p.y - centroid.y;
        let ty = dx * sin + dy * cos;
        min_t = min_t.min(ty);
        max_t = max_t.max(ty);
    }
    let extent = (max_t - min_t).max(1.0);
    let scale = FRAME_EXTENT * scale_adjust / extent;

    // Inverse mapping: frame cell -> crop pixel, then box-pooled down to the
    // coarse occupancy grid.
    let mut cells = vec![0.0f32; COARSE * COARSE];
    let half = FRAME as f64 / 2.0;
    let pool_norm = 1.0 / (POOL * POOL) as f32;
    for fy in 0..FRAME {
        for fx in 0..FRAME {
            let ux = (fx as f64 + 0.5 - half) / scale;
            let uy = (fy as f64 + 0.5 - half) / scale;
            // Undo the rotation.
            let dx = ux * cos + uy * sin;
            let dy = -ux * sin + uy * cos;
            let px = (centroid.x + dx).round();
            let py = (centroid.y + dy).round();
            if px >= 0.0 && py >= 0.0 && crop.get_checked(px as i64, py as i64) {
                cells[(fy / POOL) * COARSE + fx / POOL] += pool_norm;
            }
        }
    }
    Some(NormalizedShape::from_cells(cells))
}

/// Template matcher over the six directional archetypes.
pub struct TemplateClassifier {
    templates: Vec<(SymbolClass, NormalizedShape)>,
    score_floor: f64,
}

impl TemplateClassifier {
    /// Built-in procedurally drawn archetypes.
    pub fn with_default_templates(score_floor: f64) -> Self {
        let templates: Vec<(SymbolClass, NormalizedShape)> = SymbolClass::DIRECTIONAL
            .into_iter()
            .map(|class| {
                let mask = templates::draw_arrow_scaled(class, 55.0, 0.0);
                let shape =
                    normalize_crop(&mask, 0.0, 0.0, 1.0).expect("template renders non-empty");
                (class, shape)
            })
            .collect();
        Self {
            templates,
            score_floor,
        }
    }

    pub fn from_config(config: &PipelineConfig) -> Self {
        Self::with_default_templates(config.symbol_score_floor)
    }

    /// Loads `<class>.png` per directional class from a directory, overriding
    /// the built-in templates. Missing files fall back to the built-in shape.
    pub fn from_template_dir(dir: &Path, score_floor: f64) -> Result<Self, SymbolError> {
        if !dir.is_dir() {
            return Err(SymbolError::TemplateDir(format!(
                "{} is not a directory",
                dir.display()
            )));
        }
        let mut templates = Vec::new();
        for class in SymbolClass::DIRECTIONAL {
            let path = dir.join(format!("{}.png", class.tag()));
            let mask = if path.exists() {
                let semantic = load_mask_png(&path)?;
                BinaryMask::from_fn(semantic.width(), semantic.height(), |x, y| {
                    semantic.class_at(x, y) != Class::Irrelevant
                })
            } else {
                templates::draw_arrow_scaled(class, 55.0, 0.0)
            };
            let shape = normalize_crop(&mask, 0.0, 0.0, 1.0).ok_or_else(|| {
                SymbolError::TemplateDir(format!("template {} is empty", path.display()))
            })?;
            templates.push((class, shape));
        }
        Ok(Self {
            templates,
            score_floor,
        })
    }
}

/// Angle offsets tried on top of the principal-axis estimate; occlusions can
/// tilt the estimated axis far off the clean value.
const JITTER_DEG: [f64; 13] = [
    -30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0,
];
/// Scale factors searched around the extent-normalized size; cutouts that
/// clip an arrow tip shrink the measured extent.
const SCALE_ADJUST: [f64; 3] = [0.85, 1.0, 1.15];
/// Grid shift radius of the translation search, in coarse cells.
const SHIFT_CELLS: i64 = 1;

impl SymbolClassifier for TemplateClassifier {
    fn classify(&self, crop: &BinaryMask) -> (SymbolClass, f64) {
        let mut queries = Vec::new();
        // Four base orientations: the principal axis has a 180-degree
        // ambiguity always, and near-isotropic shapes can swap their axis by
        // 90 degrees when occlusion shifts the mass balance.
        for quarter in 0..4 {
            let base = f64::from(quarter) * std::f64::consts::FRAC_PI_2;
            for deg in JITTER_DEG {
                for scale in SCALE_ADJUST {
                    if let Some(shape) = normalize_crop(crop, deg.to_radians(), base, scale) {
                        queries.push(shape);
                    }
                }
            }
        }
        if queries.is_empty() {
            return (SymbolClass::Other, 0.0);
        }
        let mut best = (SymbolClass::Other, f64::NEG_INFINITY, 1.0f64);
        for (class, template) in &self.templates {
            for query in &queries {
                let score = query.ncc_shift_search(template, SHIFT_CELLS);
                if score > best.1 {
                    let occupancy_ratio = query.mean as f64 / template.mean.max(1e-6) as f64;
                    best = (*class, score, occupancy_ratio);
                }
            }
        }
        // Occlusion only ever removes mass; a shape carrying much more ink
        // than the archetype is not an arrow no matter how it correlates.
        let occupancy_ok = (0.60..=1.18).contains(&best.2);
        if best.1 < self.score_floor || !occupancy_ok {
            (
                SymbolClass::Other,
                best.1.clamp(0.0, 1.0).min(self.score_floor),
            )
        } else {
            (best.0, best.1)
        }
    }
}

/// Full symbol stage: crops from the (already reassigned) mask, major axis
/// and classification.
pub fn extract_symbols(
    mask: &SemanticMask,
    georef: &GeoReference,
    config: &PipelineConfig,
    classifier: &dyn SymbolClassifier,
) -> Vec<Symbol> {
    let mut out = Vec::new();
    for sc in extract_symbol_masks(mask, config.min_component_px) {
        let Ok(axis) = major_axis_endpoints(&sc.crop, sc.offset, georef) else {
            continue;
        };
        let (class, confidence) = classifier.classify(&sc.crop);
        out.push(Symbol {
            class,
            axis,
            crop: sc.crop,
            confidence,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::Hemisphere;

    fn georef() -> GeoReference {
        GeoReference::new(32, Hemisphere::North, 294000.0, 5628000.0, 0.05).unwrap()
    }

    fn mixed_component_mask(total: usize, symbol_px: usize) -> SemanticMask {
        // A single horizontal bar, part symbol, part marking.
        let mut m = SemanticMask::filled(total + 4, 5, Class::Road).unwrap();
        for x in 0..total {
            let class = if x < symbol_px {
                Class::Symbol
            } else {
                Class::LaneMarking
            };
            m.set_class(x + 2, 2, class);
        }
        m
    }

    #[test]
    fn reassignment_fires_on_majority_or_equal_symbol_share() {
        for (total, symbol_px, expect_fire) in [
            (100, 30, false),
            (100, 49, false),
            (100, 50, true),
            (100, 51, true),
            (100, 70, true),
            (100, 100, true),
        ] {
            let mask = mixed_component_mask(total, symbol_px);
            let out = reassign_mixed_components(&mask);
            let symbols_after = out.count_class(Class::Symbol);
            if expect_fire {
                assert_eq!(symbols_after, total, "fraction {symbol_px}/{total}");
                assert_eq!(out.count_class(Class::LaneMarking), 0);
            } else {
                assert_eq!(symbols_after, symbol_px, "fraction {symbol_px}/{total}");
            }
        }
    }

    #[test]
    fn reassignment_is_idempotent_and_local() {
        let mask = mixed_component_mask(60, 40);
        let once = reassign_mixed_components(&mask);
        let twice = reassign_mixed_components(&once);
        assert_eq!(once, twice);
        // Pixels outside symbol/marking never change.
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                let before = mask.class_at(x, y);
                if before != Class::Symbol && before != Class::LaneMarking {
                    assert_eq!(once.class_at(x, y), before);
                }
            }
        }
    }

    #[test]
    fn marking_majority_component_is_untouched() {
        let mask = mixed_component_mask(100, 40);
        let out = reassign_mixed_components(&mask);
        assert_eq!(out, mask);
    }

    #[test]
    fn crops_paste_back_exactly() {
        let mut m = SemanticMask::filled(60, 40, Class::Road).unwrap();
        let blobs = [
            (5usize, 5usize, 8usize, 4usize),
            (30, 10, 6, 9),
            (45, 25, 10, 10),
        ];
        for &(x0, y0, w, h) in &blobs {
            for y in y0..y0 + h {
                for x in x0..x0 + w {
                    m.set_class(x, y, Class::Symbol);
                }
            }
        }
        let crops = extract_symbol_masks(&m, 1);
        assert_eq!(crops.len(), 3);
        let mut pasted = BinaryMask::empty(60, 40);
        for sc in &crops {
            for (x, y) in sc.crop.iter_set() {
                pasted.set(x + sc.offset.0, y + sc.offset.1, true);
            }
        }
        assert_eq!(pasted, class_mask(&m, &[Class::Symbol]));
        assert!(
            extract_symbol_masks(&SemanticMask::filled(8, 8, Class::Road).unwrap(), 1).is_empty()
        );
    }

    #[test]
    fn major_axis_of_horizontal_bar() {
        let g = georef();
        let mut crop = BinaryMask::empty(40, 3);
        for y in 0..3 {
            for x in 0..40 {
                crop.set(x, y, true);
            }
        }
        let (a, b) = major_axis_endpoints(&crop, (10, 10), &g).unwrap();
        let len = a.distance(&b);
        assert!((len - 39.0 * 0.05).abs() < 0.05, "length {len}");
        // Endpoints at the bar extremes, i.e. along east-west.
        assert!((a.y - b.y).abs() < 0.03);
    }

    #[test]
    fn major_axis_of_square_falls_back_to_diagonal() {
        let g = georef();
        let side = 12usize;
        let mut crop = BinaryMask::empty(side, side);
        for y in 0..side {
            for x in 0..side {
                crop.set(x, y, true);
            }
        }
        let (a, b) = major_axis_endpoints(&crop, (0, 0), &g).unwrap();
        let len = a.distance(&b);
        let expected = (side as f64 - 1.0) * 0.05 * std::f64::consts::SQRT_2;
        assert!(
            (len - expected).abs() < 0.08,
            "diagonal {len} vs {expected}"
        );
    }

    #[test]
    fn major_axis_of_rotated_bar_tracks_the_angle() {
        let g = georef();
        let angle = 30f64.to_radians();
        let mut crop = BinaryMask::empty(60, 60);
        for t in 0..40 {
            for o in -1i64..=1 {
                let x = 10.0 + t as f64 * angle.cos() - o as f64 * angle.sin();
                let y = 50.0 - t as f64 * angle.sin() - o as f64 * angle.cos();
                crop.set(x.round() as usize, y.round() as usize, true);
            }
        }
        let (a, b) = major_axis_endpoints(&crop, (0, 0), &g).unwrap();
        // In UTM the image y flip makes the +30 degree image slope +30 in
        // northing.
        let got = ((b.y - a.y).atan2(b.x - a.x).to_degrees() + 180.0) % 180.0;
        assert!((got - 30.0).abs() < 2.0, "angle {got}");
    }

    #[test]
    fn single_pixel_crop_is_rejected() {
        let g = georef();
        let mut crop = BinaryMask::empty(3, 3);
        crop.set(1, 1, true);
        assert!(matches!(
            major_axis_endpoints(&crop, (0, 0), &g),
            Err(SymbolError::DegenerateCrop)
        ));
    }

    #[test]
    fn endpoints_are_translation_invariant() {
        let g = georef();
        let mut crop = BinaryMask::empty(30, 8);
        for y in 2..5 {
            for x in 3..27 {
                crop.set(x, y, true);
            }
        }
        let (a1, b1) = major_axis_endpoints(&crop, (0, 0), &g).unwrap();
        let (a2, b2) = major_axis_endpoints(&crop, (100, 50), &g).unwrap();
        let dx = 100.0 * 0.05;
        let dy = -(50.0 * 0.05);
        assert!((a2.x - a1.x - dx).abs() < 1e-9 && (a2.y - a1.y - dy).abs() < 1e-9);
        assert!((b2.x - b1.x - dx).abs() < 1e-9 && (b2.y - b1.y - dy).abs() < 1e-9);
    }

    #[test]
    fn template_self_match_is_perfect() {
        let classifier = TemplateClassifier::with_default_templates(0.7);
        for class in SymbolClass::DIRECTIONAL {
            let crop = templates::draw_arrow_scaled(class, 55.0, 0.0);
            let (got, confidence) = classifier.classify(&crop);
            assert_eq!(got, class, "self-match of {}", class.tag());
            assert!(
                confidence > 0.99,
                "confidence {confidence} for {}",
                class.tag()
            );
        }
    }

    #[test]
    fn rotated_scaled_arrow_still_classifies() {
        let classifier = TemplateClassifier::with_default_templates(0.7);
        let crop = templates::draw_arrow_scaled(SymbolClass::Straight, 49.0, 15f64.to_radians());
        let (got, confidence) = classifier.classify(&crop);
        assert_eq!(got, SymbolClass::Straight);
        assert!(confidence > 0.8, "confidence {confidence}");
    }

    #[test]
    fn random_blob_is_other() {
        let classifier = TemplateClassifier::with_default_templates(0.7);
        // A filled disk resembles no arrow.
        let mut crop = BinaryMask::empty(40, 40);
        for y in 0..40 {
            for x in 0..40 {
                if ((x as f64 - 20.0).powi(2) + (y as f64 - 20.0).powi(2)).sqrt() < 16.0 {
                    crop.set(x, y, true);
                }
            }
        }
        let (got, _) = classifier.classify(&crop);
        assert_eq!(got, SymbolClass::Other);
    }
}
