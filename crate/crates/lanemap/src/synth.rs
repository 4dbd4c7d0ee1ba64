//! Synthetic scene generation: class-id masks, georeference sidecars and
//! matching ground-truth maps, rendered deterministically from a scene spec.
//!
//! Scenes use the vocabulary of urban aerial tiles (straight roads, curves,
//! intersections, roundabouts) with lane markings, road arrows, walkways and
//! optional vehicle occlusions. Rasters are hard-edged: each pixel's class
//! comes from a point test at the pixel center, so masks are valid class-id
//! images by construction.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geodesy::{utm_to_wgs84, Hemisphere};
use crate::geometry::Point2;
use crate::georef::GeoReference;
use crate::kv::{KvError, KvReader};
use crate::lanelet2::{HdMap, MapBuilder, MapError, RelationMember};
use crate::raster::{Class, SemanticMask};
use crate::symbols::templates::arrow_polygons;
use crate::symbols::SymbolClass;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("scene spec: {0}")]
    Kv(#[from] KvError),
    #[error("scene spec: {0}")]
    Invalid(String),
    #[error("ground truth: {0}")]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Straight,
    Curve,
    Intersection,
    Roundabout,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Straight => "straight",
            SceneKind::Curve => "curve",
            SceneKind::Intersection => "intersection",
            SceneKind::Roundabout => "roundabout",
        }
    }

    fn from_name(name: &str) -> Option<SceneKind> {
        match name {
            "straight" => Some(SceneKind::Straight),
            "curve" => Some(SceneKind::Curve),
            "intersection" => Some(SceneKind::Intersection),
            "roundabout" => Some(SceneKind::Roundabout),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingPattern {
    Dashed,
    Solid,
    /// Separators alternate dashed/solid.
    Mixed,
}

/// Walkway placement along a straight road.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkwaySides {
    None,
    Left,
    Both,
}

/// An arrow to place: class, lane index (0 = leftmost lane) and position in
/// metres along the road axis.
#[derive(Debug, Clone, Copy)]
pub struct ArrowPlacement {
    pub class: SymbolClass,
    pub lane: usize,
    pub position_m: f64,
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub lanes: usize,
    pub lane_width_m: f64,
    /// Road extent for straight/intersection scenes.
    pub length_m: f64,
    /// Centerline radius for curve/roundabout scenes.
    pub radius_m: f64,
    pub dash_len_m: f64,
    pub dash_gap_m: f64,
    pub marking_pattern: MarkingPattern,
    pub walkway: WalkwaySides,
    /// Scene rotation (straight scenes only).
    pub rotation_deg: f64,
    pub arrows: Vec<ArrowPlacement>,
    /// Number of vehicle patches painted over symbols.
    pub occlusions: usize,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            kind: SceneKind::Straight,
            lanes: 2,
            lane_width_m: 3.5,
            length_m: 80.0,
            radius_m: 30.0,
            dash_len_m: 2.0,
            dash_gap_m: 2.0,
            marking_pattern: MarkingPattern::Dashed,
            walkway: WalkwaySides::None,
            rotation_deg: 0.0,
            arrows: Vec::new(),
            occlusions: 0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn from_text(text: &str) -> Result<Self, SynthError> {
        let mut kv = KvReader::from_text(text)?;
        let mut spec = SceneSpec::default();
        if let Some(kind) = kv.take("kind") {
            spec.kind = SceneKind::from_name(&kind)
                .ok_or_else(|| SynthError::Invalid(format!("unknown scene kind '{kind}'")))?;
        }
        if let Some(v) = kv.take_u64("lanes")? {
            spec.lanes = v as usize;
        }
        if let Some(v) = kv.take_f64("lane_width_m")? {
            spec.lane_width_m = v;
        }
        if let Some(v) = kv.take_f64("length_m")? {
            spec.length_m = v;
        }
        if let Some(v) = kv.take_f64("radius_m")? {
            spec.radius_m = v;
        }
        if let Some(v) = kv.take_f64("dash_len_m")? {
            spec.dash_len_m = v;
        }
        if let Some(v) = kv.take_f64("dash_gap_m")? {
            spec.dash_gap_m = v;
        }
        if let Some(v) = kv.take("marking_pattern") {
            spec.marking_pattern = match v.as_str() {
                "dashed" => MarkingPattern::Dashed,
                "solid" => MarkingPattern::Solid,
                "mixed" => MarkingPattern::Mixed,
                other => {
                    return Err(SynthError::Invalid(format!(
                        "unknown marking pattern '{other}'"
                    )))
                }
            };
        }
        if let Some(v) = kv.take("walkway") {
            spec.walkway = match v.as_str() {
                "none" => WalkwaySides::None,
                "left" => WalkwaySides::Left,
                "both" => WalkwaySides::Both,
                other => {
                    return Err(SynthError::Invalid(format!(
                        "unknown walkway value '{other}'"
                    )))
                }
            };
        }
        if let Some(v) = kv.take_f64("rotation_deg")? {
            spec.rotation_deg = v;
        }
        if let Some(v) = kv.take("arrows") {
            spec.arrows = parse_arrows(&v)?;
        }
        if let Some(v) = kv.take_u64("occlusions")? {
            spec.occlusions = v as usize;
        }
        if let Some(v) = kv.take_u64("seed")? {
            spec.seed = v;
        }
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let arrows = self
            .arrows
            .iter()
            .map(|a| format!("{}:{}:{}", a.class.tag(), a.lane, a.position_m))
            .collect::<Vec<_>>()
            .join(",");
        let mut out = String::new();
        out.push_str(&format!("kind = {}\n", self.kind.name()));
        out.push_str(&format!("lanes = {}\n", self.lanes));
        out.push_str(&format!("lane_width_m = {}\n", self.lane_width_m));
        out.push_str(&format!("length_m = {}\n", self.length_m));
        out.push_str(&format!("radius_m = {}\n", self.radius_m));
        out.push_str(&format!("dash_len_m = {}\n", self.dash_len_m));
        out.push_str(&format!("dash_gap_m = {}\n", self.dash_gap_m));
        out.push_str(&format!(
            "marking_pattern = {}\n",
            match self.marking_pattern {
                MarkingPattern::Dashed => "dashed",
                MarkingPattern::Solid => "solid",
                MarkingPattern::Mixed => "mixed",
            }
        ));
        out.push_str(&format!(
            "walkway = {}\n",
            match self.walkway {
                WalkwaySides::None => "none",
                WalkwaySides::Left => "left",
                WalkwaySides::Both => "both",
            }
        ));
        out.push_str(&format!("rotation_deg = {}\n", self.rotation_deg));
        if !arrows.is_empty() {
            out.push_str(&format!("arrows = {arrows}\n"));
        }
        out.push_str(&format!("occlusions = {}\n", self.occlusions));
        out.push_str(&format!("seed = {}\n", self.seed));
        out
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.lanes == 0 || self.lanes > 6 {
            return Err(SynthError::Invalid(format!(
                "lanes must be 1..=6, got {}",
                self.lanes
            )));
        }
        if !(self.lane_width_m > 2.0) {
            return Err(SynthError::Invalid("lane_width_m must exceed 2".into()));
        }
        if !(self.length_m >= 20.0) {
            return Err(SynthError::Invalid("length_m must be at least 20".into()));
        }
        if !(self.radius_m >= 10.0) {
            return Err(SynthError::Invalid("radius_m must be at least 10".into()));
        }
        for a in &self.arrows {
            if a.lane >= self.lanes {
                return Err(SynthError::Invalid(format!(
                    "arrow lane {} outside 0..{}",
                    a.lane, self.lanes
                )));
            }
        }
        Ok(())
    }

    /// A deterministic, seed-varied spec used by the evaluation sweeps.
    pub fn preset(kind: SceneKind, seed: u64) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce0e9a5_6015fec5);
        let lanes = 2 + (seed % 2) as usize;
        let arrow_classes = [
            SymbolClass::Straight,
            SymbolClass::Left,
            SymbolClass::Right,
            SymbolClass::StraightOrLeft,
            SymbolClass::StraightOrRight,
            SymbolClass::LeftOrRight,
        ];
        let mut arrows = Vec::new();
        if matches!(kind, SceneKind::Straight | SceneKind::Intersection) {
            let count = 1 + (seed as usize % 2);
            for k in 0..count {
                arrows.push(ArrowPlacement {
                    class: arrow_classes[(seed as usize + k) % arrow_classes.len()],
                    lane: k % lanes,
                    position_m: -15.0 - 10.0 * k as f64,
                });
            }
        }
        SceneSpec {
            kind,
            lanes,
            lane_width_m: 3.2 + rng.random_range(0.0..0.6),
            length_m: 70.0 + rng.random_range(0.0..20.0),
            radius_m: 26.0 + rng.random_range(0.0..10.0),
            dash_len_m: 2.0,
            dash_gap_m: 2.0,
            marking_pattern: match seed % 3 {
                0 => MarkingPattern::Dashed,
                1 => MarkingPattern::Mixed,
                _ => MarkingPattern::Solid,
            },
            walkway: match (kind, seed % 3) {
                (SceneKind::Straight, 0) => WalkwaySides::Left,
                (SceneKind::Straight, 1) => WalkwaySides::Both,
                _ => WalkwaySides::None,
            },
            rotation_deg: match kind {
                SceneKind::Straight => rng.random_range(-12.0..12.0),
                _ => 0.0,
            },
            arrows,
            occlusions: (seed % 3 == 1) as usize,
            seed,
        }
    }
}

fn parse_arrows(raw: &str) -> Result<Vec<ArrowPlacement>, SynthError> {
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 3 {
            return Err(SynthError::Invalid(format!(
                "arrow '{item}' is not class:lane:position"
            )));
        }
        let class = SymbolClass::from_tag(parts[0])
            .ok_or_else(|| SynthError::Invalid(format!("unknown arrow class '{}'", parts[0])))?;
        let lane = parts[1]
            .parse()
            .map_err(|_| SynthError::Invalid(format!("bad arrow lane '{}'", parts[1])))?;
        let position_m = parts[2]
            .parse()
            .map_err(|_| SynthError::Invalid(format!("bad arrow position '{}'", parts[2])))?;
        out.push(ArrowPlacement {
            class,
            lane,
            position_m,
        });
    }
    Ok(out)
}

/// A rendered scene: the mask, its georeference and the ground-truth map.
#[derive(Debug, Clone)]
pub struct Scene {
    pub mask: SemanticMask,
    pub georef: GeoReference,
    pub truth: HdMap,
}

const GSD: f64 = 0.05;
const ORIGIN_EASTING: f64 = 294_000.0;
const ORIGIN_NORTHING: f64 = 5_628_000.0;
const ZONE: u8 = 32;
const MARKING_WIDTH: f64 = 0.15;
const WALKWAY_WIDTH: f64 = 2.0;
const ARROW_LENGTH: f64 = 3.0;
const VEHICLE_LENGTH: f64 = 4.4;
const VEHICLE_WIDTH: f64 = 1.8;

/// Convex metric polygon.
type MetricPoly = Vec<Point2>;

fn point_in_convex(p: Point2, poly: &[Point2]) -> bool {
    let n = poly.len();
    let mut sign = 0i8;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if cross.abs() < 1e-12 {
            continue;
        }
        let s = if cross > 0.0 { 1 } else { -1 };
        if sign == 0 {
            sign = s;
        } else if sign != s {
            return false;
        }
    }
    true
}

/// A painted symbol: its convex parts plus the axis ground truth.
struct PaintedArrow {
    polys: Vec<MetricPoly>,
    class: SymbolClass,
    axis: (Point2, Point2),
    center: Point2,
}

fn arrow_paint(class: SymbolClass, center: Point2, direction: f64) -> PaintedArrow {
    // Unit arrows point +y and span y in [-1, 1]; scale to the painted
    // length and rotate so +y lands on `direction`.
    let scale = ARROW_LENGTH / 2.0;
    let rot = direction - FRAC_PI_2;
    let (s, c) = rot.sin_cos();
    let polys = arrow_polygons(class)
        .into_iter()
        .map(|poly| {
            poly.into_iter()
                .map(|(x, y)| {
                    Point2::new(
                        center.x + (x * c - y * s) * scale,
                        center.y + (x * s + y * c) * scale,
                    )
                })
                .collect()
        })
        .collect();
    let dir = Point2::new(direction.cos(), direction.sin());
    let axis = (
        Point2::new(center.x - dir.x * scale, center.y - dir.y * scale),
        Point2::new(center.x + dir.x * scale, center.y + dir.y * scale),
    );
    PaintedArrow {
        polys,
        class,
        axis,
        center,
    }
}

fn rect_poly(center: Point2, half_u: f64, half_v: f64, direction: f64) -> MetricPoly {
    let (s, c) = direction.sin_cos();
    [
        (-half_u, -half_v),
        (half_u, -half_v),
        (half_u, half_v),
        (-half_u, half_v),
    ]
    .iter()
    .map(|&(u, v)| Point2::new(center.x + u * c - v * s, center.y + u * s + v * c))
    .collect()
}

/// Everything needed to rasterize and to emit ground truth.
struct ScenePlan {
    width_px: usize,
    height_px: usize,
    georef: GeoReference,
    /// Base surface classification (road/walkway/vegetation/island).
    surface: Box<dyn Fn(Point2) -> Class>,
    /// Marking stripes as center polyline + half width; class LaneMarking.
    stripes: Vec<(Vec<Point2>, f64)>,
    arrows: Vec<PaintedArrow>,
    occlusion_rects: Vec<MetricPoly>,
    /// Ground-truth polylines: (points, type tag, optional subtype).
    truth_lines: Vec<(Vec<Point2>, &'static str, Option<&'static str>, bool)>,
    /// Ground-truth lanelet pairs as indices into `truth_lines`.
    truth_lanelets: Vec<(usize, usize)>,
}

/// Renders a scene spec to mask + georeference + ground truth.
pub fn render_scene(spec: &SceneSpec) -> Result<Scene, SynthError> {
    spec.validate()?;
    let plan = match spec.kind {
        SceneKind::Straight => plan_straight(spec),
        SceneKind::Curve => plan_curve(spec),
        SceneKind::Intersection => plan_intersection(spec),
        SceneKind::Roundabout => plan_roundabout(spec),
    };
    let georef = plan.georef;

    let mut data = vec![Class::Vegetation.id(); plan.width_px * plan.height_px];
    for py in 0..plan.height_px {
        for px in 0..plan.width_px {
            let p = georef.pixel_point_to_utm(Point2::new(px as f64, py as f64));
            data[py * plan.width_px + px] = (plan.surface)(p).id();
        }
    }

    // Overlays only touch the pixels inside their own bounding boxes.
    let paint_bbox = |points: &[Point2],
                      pad: f64,
                      data: &mut Vec<u8>,
                      test: &dyn Fn(Point2) -> bool,
                      class: Class,
                      over_road_only: bool| {
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for p in points {
            min_x = min_x.min(p.x - pad);
            min_y = min_y.min(p.y - pad);
            max_x = max_x.max(p.x + pad);
            max_y = max_y.max(p.y + pad);
        }
        let a = georef.utm_point_to_pixel(Point2::new(min_x, max_y));
        let b = georef.utm_point_to_pixel(Point2::new(max_x, min_y));
        let px0 = (a.x.floor().max(0.0)) as usize;
        let py0 = (a.y.floor().max(0.0)) as usize;
        let px1 = (b.x.ceil().min(plan.width_px as f64 - 1.0)) as usize;
        let py1 = (b.y.ceil().min(plan.height_px as f64 - 1.0)) as usize;
        for py in py0..=py1 {
            for px in px0..=px1 {
                let idx = py * plan.width_px + px;
                if over_road_only && data[idx] != Class::Road.id() {
                    continue;
                }
                let p = georef.pixel_point_to_utm(Point2::new(px as f64, py as f64));
                if test(p) {
                    data[idx] = class.id();
                }
            }
        }
    };

    for (center_line, half_w) in &plan.stripes {
        for seg in center_line.windows(2) {
            let test = |p: Point2| distance_to_open_chain(seg, &p) <= *half_w;
            paint_bbox(seg, *half_w, &mut data, &test, Class::LaneMarking, true);
        }
    }
    for arrow in &plan.arrows {
        for poly in &arrow.polys {
            let test = |p: Point2| point_in_convex(p, poly);
            paint_bbox(poly, 0.0, &mut data, &test, Class::Symbol, true);
        }
    }
    for rect in &plan.occlusion_rects {
        let test = |p: Point2| point_in_convex(p, rect);
        paint_bbox(rect, 0.0, &mut data, &test, Class::Vehicle, false);
    }

    let mask = SemanticMask::new(plan.width_px, plan.height_px, data)
        .expect("generator produces valid class ids");

    // Ground truth map.
    let mut builder = MapBuilder::new();
    let mut way_ids = Vec::new();
    for (points, way_type, subtype, closed) in &plan.truth_lines {
        let mut refs = Vec::new();
        for p in points {
            let (lat, lon) = utm_to_wgs84(p.x, p.y, georef.zone, georef.hemisphere)
                .map_err(|e| SynthError::Invalid(format!("truth point outside zone: {e}")))?;
            refs.push(builder.add_node(lat, lon, p.x, p.y));
        }
        if *closed {
            let first = refs[0];
            refs.push(first);
        }
        let mut tags = vec![("type".to_string(), way_type.to_string())];
        if let Some(sub) = subtype {
            tags.push(("subtype".to_string(), sub.to_string()));
        }
        way_ids.push(builder.add_way(refs, tags));
    }
    for arrow in &plan.arrows {
        let mut refs = Vec::new();
        for p in [arrow.axis.0, arrow.axis.1] {
            let (lat, lon) = utm_to_wgs84(p.x, p.y, georef.zone, georef.hemisphere)
                .map_err(|e| SynthError::Invalid(format!("truth point outside zone: {e}")))?;
            refs.push(builder.add_node(lat, lon, p.x, p.y));
        }
        builder.add_way(
            refs,
            vec![
                ("type".to_string(), "arrow".to_string()),
                ("subtype".to_string(), arrow.class.tag().to_string()),
            ],
        );
    }
    for &(left, right) in &plan.truth_lanelets {
        builder.add_relation(
            vec![
                RelationMember {
                    member_type: "way".into(),
                    role: "left".into(),
                    ref_id: way_ids[left],
                },
                RelationMember {
                    member_type: "way".into(),
                    role: "right".into(),
                    ref_id: way_ids[right],
                },
            ],
            vec![
                ("type".to_string(), "lanelet".to_string()),
                ("needs_review_direction".to_string(), "yes".to_string()),
            ],
        );
    }
    let truth = builder.finish()?;
    Ok(Scene {
        mask,
        georef,
        truth,
    })
}

fn distance_to_open_chain(points: &[Point2], p: &Point2) -> f64 {
    let mut best = f64::INFINITY;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let abx = b.x - a.x;
        let aby = b.y - a.y;
        let len2 = abx * abx + aby * aby;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0)
        };
        let d = p.distance(&Point2::new(a.x + t * abx, a.y + t * aby));
        best = best.min(d);
    }
    best
}

/// Tile rectangle in UTM metres (inclusive of the drawn pixel centers).
struct Tile {
    min: Point2,
    max: Point2,
}

impl Tile {
    fn georef(width_m: f64, height_m: f64) -> (GeoReference, usize, usize, Tile) {
        let width_px = (width_m / GSD).round() as usize;
        let height_px = (height_m / GSD).round() as usize;
        let georef = GeoReference::new(
            ZONE,
            Hemisphere::North,
            ORIGIN_EASTING,
            ORIGIN_NORTHING,
            GSD,
        )
        .unwrap();
        let tile = Tile {
            min: Point2::new(ORIGIN_EASTING, ORIGIN_NORTHING - height_px as f64 * GSD),
            max: Point2::new(ORIGIN_EASTING + width_px as f64 * GSD, ORIGIN_NORTHING),
        };
        (georef, width_px, height_px, tile)
    }

    fn center(&self) -> Point2 {
        Point2::new(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
        )
    }

    /// Clips segment a-b to the rectangle shrunk by `inset` (Liang-Barsky).
    fn clip_segment(&self, a: Point2, b: Point2, inset: f64) -> Option<(Point2, Point2)> {
        let (min_x, min_y) = (self.min.x + inset, self.min.y + inset);
        let (max_x, max_y) = (self.max.x - inset, self.max.y - inset);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-dx, a.x - min_x),
            (dx, max_x - a.x),
            (-dy, a.y - min_y),
            (dy, max_y - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
                continue;
            }
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some((a.lerp(&b, t0), a.lerp(&b, t1)))
    }
}

/// Dash intervals [start, end) along an axis of the given extent, keeping
/// full dashes only.
fn dash_intervals(u_min: f64, u_max: f64, dash_len: f64, gap: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let period = dash_len + gap;
    let mut start = (u_min / period).floor() * period;
    while start < u_max {
        if start >= u_min && start + dash_len <= u_max {
            out.push((start, start + dash_len));
        }
        start += period;
    }
    out
}

fn plan_straight(spec: &SceneSpec) -> ScenePlan {
    let theta = spec.rotation_deg.to_radians();
    let half_road = spec.lanes as f64 * spec.lane_width_m / 2.0;
    let margin = 4.0;
    let height_m =
        2.0 * half_road + 2.0 * (WALKWAY_WIDTH + margin) + spec.length_m * theta.tan().abs();
    let (georef, width_px, height_px, tile) = Tile::georef(spec.length_m, height_m);
    let center = tile.center();
    let dir = Point2::new(theta.cos(), theta.sin());
    let normal = Point2::new(-theta.sin(), theta.cos());

    let to_uv = move |p: Point2| -> (f64, f64) {
        let dx = p.x - center.x;
        let dy = p.y - center.y;
        (dx * dir.x + dy * dir.y, dx * normal.x + dy * normal.y)
    };
    let from_uv = move |u: f64, v: f64| -> Point2 {
        Point2::new(
            center.x + u * dir.x + v * normal.x,
            center.y + u * dir.y + v * normal.y,
        )
    };

    let walkway = spec.walkway;
    let surface = Box::new(move |p: Point2| -> Class {
        let (_, v) = to_uv(p);
        if v.abs() <= half_road {
            Class::Road
        } else if v.abs() <= half_road + WALKWAY_WIDTH {
            match walkway {
                WalkwaySides::Both => Class::Walkway,
                WalkwaySides::Left if v > 0.0 => Class::Walkway,
                _ => Class::Vegetation,
            }
        } else {
            Class::Vegetation
        }
    });

    // Separator stripes between lanes, alternating by pattern.
    let long_reach = spec.length_m; // guaranteed to cross the tile
    let mut stripes = Vec::new();
    let mut truth_lines: Vec<(Vec<Point2>, &'static str, Option<&'static str>, bool)> = Vec::new();

    // Borders first (indices stable for lanelet pairs).
    for side in [1.0, -1.0] {
        let v = side * half_road;
        let (a, b) = tile
            .clip_segment(from_uv(-long_reach, v), from_uv(long_reach, v), 0.0)
            .expect("road crosses the tile");
        let kind = match (walkway, side > 0.0) {
            (WalkwaySides::Both, _) => "curbstone",
            (WalkwaySides::Left, true) => "curbstone",
            _ => "road_border",
        };
        truth_lines.push((vec![a, b], kind, None, false));
    }

    for k in 1..spec.lanes {
        let v = -half_road + k as f64 * spec.lane_width_m;
        let dashed = match spec.marking_pattern {
            MarkingPattern::Dashed => true,
            MarkingPattern::Solid => false,
            MarkingPattern::Mixed => k % 2 == 1,
        };
        // Paintable extent along u at this v: clip the stripe line.
        let Some((a, b)) = tile.clip_segment(
            from_uv(-long_reach, v),
            from_uv(long_reach, v),
            MARKING_WIDTH,
        ) else {
            continue;
        };
        let (ua, _) = to_uv(a);
        let (ub, _) = to_uv(b);
        let (u_min, u_max) = (ua.min(ub), ua.max(ub));
        if dashed {
            let intervals =
                dash_intervals(u_min + 1.0, u_max - 1.0, spec.dash_len_m, spec.dash_gap_m);
            if intervals.len() >= 2 {
                for &(s, e) in &intervals {
                    stripes.push((vec![from_uv(s, v), from_uv(e, v)], MARKING_WIDTH / 2.0));
                }
                let centroids: Vec<Point2> = intervals
                    .iter()
                    .map(|&(s, e)| from_uv((s + e) / 2.0, v))
                    .collect();
                truth_lines.push((centroids, "line_thin", Some("dashed"), false));
            }
        } else {
            stripes.push((
                vec![from_uv(u_min + 1.0, v), from_uv(u_max - 1.0, v)],
                MARKING_WIDTH / 2.0,
            ));
            truth_lines.push((
                vec![from_uv(u_min + 1.0, v), from_uv(u_max - 1.0, v)],
                "line_thin",
                Some("solid"),
                false,
            ));
        }
    }

    // Lane corridors: boundary index per lane edge. Index 0 = +half (left
    // looking along +u), 1 = -half; separators start at index 2.
    let mut truth_lanelets = Vec::new();
    let boundary_of = |edge: usize, spec: &SceneSpec| -> usize {
        // edge e counts from the +v side: e=0 is +half, e=lanes is -half.
        if edge == 0 {
            0
        } else if edge == spec.lanes {
            1
        } else {
            // Separator k (1-based from -half side) = edge lanes-k.
            1 + (spec.lanes - edge)
        }
    };
    let emitted_separators = truth_lines.len() - 2;
    if emitted_separators + 1 == spec.lanes {
        for lane in 0..spec.lanes {
            truth_lanelets.push((boundary_of(lane, spec), boundary_of(lane + 1, spec)));
        }
    }

    // Arrows at lane centers.
    let mut arrows = Vec::new();
    for a in &spec.arrows {
        let v = half_road - (a.lane as f64 + 0.5) * spec.lane_width_m;
        let center = from_uv(a.position_m, v);
        arrows.push(arrow_paint(a.class, center, theta));
    }

    // Occlusions cover arrows (aerial imagery loses symbols under vehicles).
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9e3779b9));
    let mut occlusion_rects = Vec::new();
    for k in 0..spec.occlusions.min(arrows.len()) {
        let target = &arrows[k];
        // Offset along the road so the vehicle clips the arrow instead of
        // swallowing it whole.
        let offset = rng.random_range(1.7..2.6) * if k % 2 == 0 { 1.0 } else { -1.0 };
        occlusion_rects.push(rect_poly(
            Point2::new(
                target.center.x + offset * dir.x,
                target.center.y + offset * dir.y,
            ),
            VEHICLE_LENGTH / 2.0,
            VEHICLE_WIDTH / 2.0,
            theta,
        ));
    }

    ScenePlan {
        width_px,
        height_px,
        georef,
        surface,
        stripes,
        arrows,
        occlusion_rects,
        truth_lines,
        truth_lanelets,
    }
}

fn plan_curve(spec: &SceneSpec) -> ScenePlan {
    let half_road = spec.lanes as f64 * spec.lane_width_m / 2.0;
    let r_outer = spec.radius_m + half_road;
    let side_m = r_outer + 3.0;
    let (georef, width_px, height_px, tile) = Tile::georef(side_m, side_m);
    // Arc center at the tile's south-west metric corner: the ring enters
    // through the south edge and exits through the west edge.
    let c = Point2::new(tile.min.x, tile.min.y);
    let radius = spec.radius_m;

    let surface = Box::new(move |p: Point2| -> Class {
        let r = p.distance(&c);
        if (r - radius).abs() <= half_road {
            Class::Road
        } else {
            Class::Vegetation
        }
    });

    let arc_points = |r: f64, phi0: f64, phi1: f64| -> Vec<Point2> {
        let steps = ((phi1 - phi0).abs() * r / 0.25).ceil().max(8.0) as usize;
        (0..=steps)
            .map(|k| {
                let phi = phi0 + (phi1 - phi0) * k as f64 / steps as f64;
                Point2::new(c.x + r * phi.cos(), c.y + r * phi.sin())
            })
            .collect()
    };

    let mut truth_lines: Vec<(Vec<Point2>, &'static str, Option<&'static str>, bool)> = Vec::new();
    for r in [radius + half_road, radius - half_road] {
        truth_lines.push((arc_points(r, 0.0, FRAC_PI_2), "road_border", None, false));
    }

    let mut stripes = Vec::new();
    for k in 1..spec.lanes {
        let r_k = radius - half_road + k as f64 * spec.lane_width_m;
        let dashed = match spec.marking_pattern {
            MarkingPattern::Dashed => true,
            MarkingPattern::Solid => false,
            MarkingPattern::Mixed => k % 2 == 1,
        };
        let arc_len = r_k * FRAC_PI_2;
        if dashed {
            let intervals = dash_intervals(1.0, arc_len - 1.0, spec.dash_len_m, spec.dash_gap_m);
            if intervals.len() >= 2 {
                for &(s, e) in &intervals {
                    stripes.push((arc_points(r_k, s / r_k, e / r_k), MARKING_WIDTH / 2.0));
                }
                let centroids: Vec<Point2> = intervals
                    .iter()
                    .map(|&(s, e)| {
                        let phi = (s + e) / 2.0 / r_k;
                        Point2::new(c.x + r_k * phi.cos(), c.y + r_k * phi.sin())
                    })
                    .collect();
                truth_lines.push((centroids, "line_thin", Some("dashed"), false));
            }
        } else {
            let phi0 = 1.0 / r_k;
            let phi1 = FRAC_PI_2 - 1.0 / r_k;
            stripes.push((arc_points(r_k, phi0, phi1), MARKING_WIDTH / 2.0));
            truth_lines.push((
                arc_points(r_k, phi0, phi1),
                "line_thin",
                Some("solid"),
                false,
            ));
        }
    }

    let mut truth_lanelets = Vec::new();
    let emitted_separators = truth_lines.len() - 2;
    if emitted_separators + 1 == spec.lanes {
        for lane in 0..spec.lanes {
            let outer: usize = if lane == 0 {
                0
            } else {
                1 + (spec.lanes - lane)
            };
            let inner: usize = if lane + 1 == spec.lanes {
                1
            } else {
                1 + (spec.lanes - lane - 1)
            };
            truth_lanelets.push((outer, inner));
        }
    }

    ScenePlan {
        width_px,
        height_px,
        georef,
        surface,
        stripes,
        arrows: Vec::new(),
        occlusion_rects: Vec::new(),
        truth_lines,
        truth_lanelets,
    }
}

fn plan_intersection(spec: &SceneSpec) -> ScenePlan {
    let half = spec.lanes as f64 * spec.lane_width_m / 2.0;
    let side_m = spec.length_m;
    let (georef, width_px, height_px, tile) = Tile::georef(side_m, side_m);
    let center = tile.center();

    let surface = Box::new(move |p: Point2| -> Class {
        let dx = (p.x - center.x).abs();
        let dy = (p.y - center.y).abs();
        if dy <= half || dx <= half {
            Class::Road
        } else {
            Class::Vegetation
        }
    });

    // Borders: four corner Ls, each two segments sharing the corner point.
    let reach = side_m;
    let mut truth_lines: Vec<(Vec<Point2>, &'static str, Option<&'static str>, bool)> = Vec::new();
    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let corner = Point2::new(center.x + sx * half, center.y + sy * half);
        // Horizontal piece: along y = center.y + sy*half, from the corner
        // outward in x.
        let (ha, hb) = tile
            .clip_segment(corner, Point2::new(center.x + sx * reach, corner.y), 0.0)
            .expect("corner segment crosses tile");
        truth_lines.push((vec![ha, hb], "road_border", None, false));
        let (va, vb) = tile
            .clip_segment(corner, Point2::new(corner.x, center.y + sy * reach), 0.0)
            .expect("corner segment crosses tile");
        truth_lines.push((vec![va, vb], "road_border", None, false));
    }

    // Center dashes on each arm, stopping short of the junction box.
    let mut stripes = Vec::new();
    let dashed = !matches!(spec.marking_pattern, MarkingPattern::Solid);
    let arm_specs: [(bool, f64, f64, f64); 4] = [
        // (horizontal?, fixed coordinate, from, to)
        (true, center.y, center.x + half + 2.0, tile.max.x - 1.0),
        (true, center.y, tile.min.x + 1.0, center.x - half - 2.0),
        (false, center.x, center.y + half + 2.0, tile.max.y - 1.0),
        (false, center.x, tile.min.y + 1.0, center.y - half - 2.0),
    ];
    for &(horizontal, fixed, from, to) in &arm_specs {
        if to - from < 6.0 {
            continue;
        }
        let line_point = |u: f64| -> Point2 {
            if horizontal {
                Point2::new(u, fixed)
            } else {
                Point2::new(fixed, u)
            }
        };
        if dashed {
            let intervals = dash_intervals(from, to, spec.dash_len_m, spec.dash_gap_m);
            if intervals.len() >= 2 {
                for &(s, e) in &intervals {
                    stripes.push((vec![line_point(s), line_point(e)], MARKING_WIDTH / 2.0));
                }
                let centroids: Vec<Point2> = intervals
                    .iter()
                    .map(|&(s, e)| line_point((s + e) / 2.0))
                    .collect();
                truth_lines.push((centroids, "line_thin", Some("dashed"), false));
            }
        } else {
            stripes.push((vec![line_point(from), line_point(to)], MARKING_WIDTH / 2.0));
            truth_lines.push((
                vec![line_point(from), line_point(to)],
                "line_thin",
                Some("solid"),
                false,
            ));
        }
    }

    // Stop lines on two approaches: solid bars perpendicular to the arm.
    for (sx, v_side) in [(1.0, -1.0), (-1.0, 1.0)] {
        let x = center.x + sx * (half + 1.0);
        let y0 = center.y + v_side * 0.3;
        let y1 = center.y + v_side * (half - 0.3);
        let a = Point2::new(x, y0.min(y1));
        let b = Point2::new(x, y0.max(y1));
        stripes.push((vec![a, b], 0.15));
        truth_lines.push((vec![a, b], "line_thin", Some("solid"), false));
    }

    // Arrows on the eastbound approach lanes.
    let mut arrows = Vec::new();
    for a in &spec.arrows {
        let v = half - (a.lane as f64 + 0.5) * spec.lane_width_m;
        let arrow_center = Point2::new(center.x + a.position_m, center.y + v);
        arrows.push(arrow_paint(a.class, arrow_center, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9e3779b9));
    let mut occlusion_rects = Vec::new();
    for k in 0..spec.occlusions.min(arrows.len()) {
        let target = &arrows[k];
        let offset = rng.random_range(1.7..2.6) * if k % 2 == 0 { 1.0 } else { -1.0 };
        occlusion_rects.push(rect_poly(
            Point2::new(target.center.x + offset, target.center.y),
            VEHICLE_LENGTH / 2.0,
            VEHICLE_WIDTH / 2.0,
            0.0,
        ));
    }

    ScenePlan {
        width_px,
        height_px,
        georef,
        surface,
        stripes,
        arrows,
        occlusion_rects,
        truth_lines,
        truth_lanelets: Vec::new(),
    }
}

fn plan_roundabout(spec: &SceneSpec) -> ScenePlan {
    let half_road = spec.lanes as f64 * spec.lane_width_m / 2.0;
    let r_outer = spec.radius_m + half_road;
    let side_m = 2.0 * r_outer + 8.0;
    let (georef, width_px, height_px, tile) = Tile::georef(side_m, side_m);
    let c = tile.center();
    let radius = spec.radius_m;

    let surface = Box::new(move |p: Point2| -> Class {
        let r = p.distance(&c);
        if (r - radius).abs() <= half_road {
            Class::Road
        } else if r < radius - half_road {
            Class::TrafficIsland
        } else {
            Class::Vegetation
        }
    });

    let circle_points = |r: f64| -> Vec<Point2> {
        let steps = ((2.0 * PI * r) / 0.25).ceil() as usize;
        (0..steps)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / steps as f64;
                Point2::new(c.x + r * phi.cos(), c.y + r * phi.sin())
            })
            .collect()
    };

    let mut truth_lines: Vec<(Vec<Point2>, &'static str, Option<&'static str>, bool)> = Vec::new();
    truth_lines.push((circle_points(radius + half_road), "road_border", None, true));
    truth_lines.push((circle_points(radius - half_road), "road_border", None, true));

    // Circular separators are painted solid; a closed dashed ring would not
    // order cleanly along a single axis.
    let mut stripes = Vec::new();
    for k in 1..spec.lanes {
        let r_k = radius - half_road + k as f64 * spec.lane_width_m;
        stripes.push((circle_points(r_k), MARKING_WIDTH / 2.0));
        truth_lines.push((circle_points(r_k), "line_thin", Some("solid"), true));
    }

    ScenePlan {
        width_px,
        height_px,
        georef,
        surface,
        stripes,
        arrows: Vec::new(),
        occlusion_rects: Vec::new(),
        truth_lines,
        truth_lanelets: Vec::new(),
    }
}

/// Degrades a mask with boundary noise: every pixel sitting on a class
/// boundary flips to a random 4-neighbor's class with probability
/// `flip_prob`. One pass of random single-pixel erosion/dilation of every
/// class edge.
pub fn perturb_boundaries(mask: &SemanticMask, flip_prob: f64, seed: u64) -> SemanticMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (mask.width(), mask.height());
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            let own = mask.class_at(x, y);
            let neighbors: Vec<Class> = [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)]
                .iter()
                .filter_map(|&(dx, dy)| mask.class_at_checked(x as i64 + dx, y as i64 + dy))
                .collect();
            let on_boundary = neighbors.iter().any(|&c| c != own);
            if !on_boundary {
                continue;
            }
            if rng.random_range(0.0..1.0) < flip_prob {
                let different: Vec<Class> = neighbors.into_iter().filter(|&c| c != own).collect();
                let pick = different[rng.random_range(0..different.len())];
                out.set_class(x, y, pick);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::border::drivable_mask;
    use crate::raster::{connected_components, Connectivity};

    #[test]
    fn spec_text_round_trip() {
        let mut spec = SceneSpec::default();
        spec.arrows = vec![ArrowPlacement {
            class: SymbolClass::Left,
            lane: 1,
            position_m: 12.5,
        }];
        spec.walkway = WalkwaySides::Both;
        spec.rotation_deg = -7.5;
        let text = spec.to_text();
        let parsed = SceneSpec::from_text(&text).unwrap();
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn spec_rejects_bad_values() {
        assert!(SceneSpec::from_text("kind = hexagon\n").is_err());
        assert!(SceneSpec::from_text("lanes = 0\n").is_err());
        assert!(SceneSpec::from_text("arrows = left:9:10\n").is_err());
        assert!(SceneSpec::from_text("unknown_key = 3\n").is_err());
    }

    #[test]
    fn straight_scene_drivable_area_is_one_component() {
        let spec = SceneSpec::default();
        let scene = render_scene(&spec).unwrap();
        let drivable = drivable_mask(&scene.mask);
        let cs = connected_components(&drivable, Connectivity::Eight);
        assert_eq!(cs.len(), 1);
        // Road runs off both tile sides.
        assert!(drivable.get(0, scene.mask.height() / 2));
        assert!(drivable.get(scene.mask.width() - 1, scene.mask.height() / 2));
    }

    #[test]
    fn rendering_is_deterministic() {
        let spec = SceneSpec::preset(SceneKind::Straight, 7);
        let a = render_scene(&spec).unwrap();
        let b = render_scene(&spec).unwrap();
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn truth_maps_validate_for_all_kinds() {
        for kind in [
            SceneKind::Straight,
            SceneKind::Curve,
            SceneKind::Intersection,
            SceneKind::Roundabout,
        ] {
            for seed in [0, 1, 2] {
                let spec = SceneSpec::preset(kind, seed);
                let scene = render_scene(&spec).unwrap();
                scene
                    .truth
                    .validate()
                    .unwrap_or_else(|e| panic!("{} seed {seed}: invalid truth: {e}", kind.name()));
                assert!(scene.truth.ways.len() >= 2, "{} has ways", kind.name());
            }
        }
    }

    #[test]
    fn perturbation_only_touches_boundaries() {
        let spec = SceneSpec::default();
        let scene = render_scene(&spec).unwrap();
        let noisy = perturb_boundaries(&scene.mask, 0.05, 42);
        let mut changed = 0usize;
        for y in 0..scene.mask.height() {
            for x in 0..scene.mask.width() {
                if noisy.class_at(x, y) != scene.mask.class_at(x, y) {
                    changed += 1;
                    let own = scene.mask.class_at(x, y);
                    let boundary =
                        [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)]
                            .iter()
                            .any(|&(dx, dy)| {
                                scene
                                    .mask
                                    .class_at_checked(x as i64 + dx, y as i64 + dy)
                                    .map(|c| c != own)
                                    .unwrap_or(false)
                            });
                    assert!(boundary, "interior pixel ({x}, {y}) changed");
                }
            }
        }
        assert!(changed > 0);
        // Determinism.
        assert_eq!(noisy, perturb_boundaries(&scene.mask, 0.05, 42));
    }

    #[test]
    fn straight_scene_with_occlusion_paints_vehicle() {
        let mut spec = SceneSpec::default();
        spec.arrows = vec![ArrowPlacement {
            class: SymbolClass::Straight,
            lane: 0,
            position_m: 0.0,
        }];
        spec.occlusions = 1;
        let scene = render_scene(&spec).unwrap();
        assert!(scene.mask.count_class(Class::Vehicle) > 0);
        assert!(scene.mask.count_class(Class::Symbol) > 0);
    }
}
