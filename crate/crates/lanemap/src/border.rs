//! Road-border extraction: the drivable area's boundary as classified
//! polylines.
//!
//! The drivable mask (road + lane markings + symbols) is cleaned up, its
//! contours traced, converted to UTM metres, simplified and split at strong
//! orientation changes. Each resulting chain is classified as a plain road
//! border or a curbstone depending on whether a walkway sits on its outer
//! side.

use crate::config::PipelineConfig;
use crate::geometry::{self, Point2, Polyline, Unit};
use crate::georef::GeoReference;
use crate::raster::{
    class_mask, connected_components, trace_contours, BinaryMask, Class, Connectivity, SemanticMask,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderKind {
    RoadBorder,
    Curbstone,
}

impl BorderKind {
    pub fn tag(self) -> &'static str {
        match self {
            BorderKind::RoadBorder => "road_border",
            BorderKind::Curbstone => "curbstone",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoadBorder {
    pub line: Polyline,
    pub kind: BorderKind,
}

/// Union mask of the classes a vehicle can drive on.
pub fn drivable_mask(mask: &SemanticMask) -> BinaryMask {
    class_mask(mask, &Class::DRIVABLE)
}

/// Fills enclosed background holes smaller than `max_px` pixels. Vehicles and
/// segmentation debris punch small holes into the drivable area; traffic
/// islands are far larger and survive.
pub fn fill_small_holes(mask: &BinaryMask, max_px: usize) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let inverse = BinaryMask::from_fn(w, h, |x, y| !mask.get(x, y));
    let bg = connected_components(&inverse, Connectivity::Four);
    let mut out = mask.clone();
    for comp in bg.components() {
        if comp.pixel_count >= max_px {
            continue;
        }
        let touches_border = comp
            .pixels
            .iter()
            .any(|&(x, y)| x == 0 || y == 0 || x == w - 1 || y == h - 1);
        if touches_border {
            continue;
        }
        for &(x, y) in &comp.pixels {
            out.set(x, y, true);
        }
    }
    out
}

/// Border polylines (UTM metres) of the drivable mask: traced, cleared of
/// tile-edge runs, simplified, then split on orientation.
pub fn extract_borders(
    drivable: &BinaryMask,
    georef: &GeoReference,
    config: &PipelineConfig,
) -> Vec<Polyline> {
    let (w, h) = (drivable.width(), drivable.height());
    let cs = connected_components(drivable, Connectivity::Eight);
    let kept = cs.filter_by_size(config.min_component_px, usize::MAX);
    let mut retained = BinaryMask::empty(w, h);
    for comp in kept.components() {
        for &(x, y) in &comp.pixels {
            retained.set(x, y, true);
        }
    }

    let mut out = Vec::new();
    for contour in trace_contours(&retained) {
        let on_edge = |&(x, y): &(usize, usize)| x == 0 || y == 0 || x == w - 1 || y == h - 1;
        // The tile cut is not a road border: edge-running points are removed
        // and the ring is re-opened into interior chains.
        let chains: Vec<(Vec<(usize, usize)>, bool)> = if contour.points.iter().any(on_edge) {
            split_ring_on(&contour.points, on_edge)
                .into_iter()
                .map(|c| (c, false))
                .collect()
        } else {
            vec![(contour.points.clone(), true)]
        };
        for (chain, closed) in chains {
            let metric: Vec<Point2> = chain
                .iter()
                .map(|&(x, y)| georef.pixel_point_to_utm(Point2::new(x as f64, y as f64)))
                .collect();
            let Some(pl) = Polyline::dedup(metric, closed, Unit::Metre) else {
                continue;
            };
            let Ok(simplified) = geometry::simplify(&pl, config.simplify_tolerance_m) else {
                continue;
            };
            match geometry::split_on_orientation(&simplified, config.border_max_turn_deg) {
                Ok(parts) => out.extend(parts),
                Err(_) => out.push(simplified),
            }
        }
    }
    out
}

/// Maximal runs of points for which `drop` is false, walking the closed ring.
fn split_ring_on(
    ring: &[(usize, usize)],
    dropped: impl Fn(&(usize, usize)) -> bool,
) -> Vec<Vec<(usize, usize)>> {
    let n = ring.len();
    if n == 0 {
        return Vec::new();
    }
    if !ring.iter().any(&dropped) {
        return vec![ring.to_vec()];
    }
    // Start from a dropped point so runs never wrap.
    let start = ring.iter().position(&dropped).unwrap();
    let mut chains = Vec::new();
    let mut current: Vec<(usize, usize)> = Vec::new();
    for k in 1..=n {
        let p = ring[(start + k) % n];
        if dropped(&p) {
            if current.len() >= 2 {
                chains.push(std::mem::take(&mut current));
            } else {
                current.clear();
            }
        } else {
            current.push(p);
        }
    }
    if current.len() >= 2 {
        chains.push(current);
    }
    chains
}

/// Classifies a border by probing its outward side for walkway pixels.
/// The outward side is whichever side of the chain is less drivable, probed
/// one pixel out; this makes the result independent of point order.
pub fn classify_border(
    line: &Polyline,
    mask: &SemanticMask,
    georef: &GeoReference,
    config: &PipelineConfig,
) -> BorderKind {
    let pixel_pts: Vec<Point2> = line
        .points()
        .iter()
        .map(|&p| georef.utm_point_to_pixel(p))
        .collect();
    let n = pixel_pts.len();
    let drivable: [bool; Class::COUNT] = {
        let mut d = [false; Class::COUNT];
        for c in Class::DRIVABLE {
            d[c.id() as usize] = true;
        }
        d
    };
    let class_at = |p: Point2| -> Option<Class> {
        mask.class_at_checked(p.x.round() as i64, p.y.round() as i64)
    };

    // Unit normal at each vertex from the adjacent segment directions.
    let mut normals: Vec<Option<(Point2, Point2)>> = Vec::with_capacity(n);
    for i in 0..n {
        let prev = if i == 0 {
            pixel_pts[0]
        } else {
            pixel_pts[i - 1]
        };
        let next = if i + 1 == n {
            pixel_pts[n - 1]
        } else {
            pixel_pts[i + 1]
        };
        let (dx, dy) = (next.x - prev.x, next.y - prev.y);
        let len = dx.hypot(dy);
        if len < 1e-9 {
            normals.push(None); // degenerate normal: skip vertex
            continue;
        }
        let normal = Point2::new(-dy / len, dx / len);
        normals.push(Some((pixel_pts[i], normal)));
    }

    // Vote for the outward (non-drivable) side one pixel out.
    let mut plus_drivable = 0i64;
    let mut minus_drivable = 0i64;
    for entry in normals.iter().flatten() {
        let (p, normal) = *entry;
        let plus = class_at(Point2::new(p.x + normal.x, p.y + normal.y));
        let minus = class_at(Point2::new(p.x - normal.x, p.y - normal.y));
        if plus.map(|c| drivable[c.id() as usize]).unwrap_or(false) {
            plus_drivable += 1;
        }
        if minus.map(|c| drivable[c.id() as usize]).unwrap_or(false) {
            minus_drivable += 1;
        }
    }
    let sign = if plus_drivable <= minus_drivable {
        1.0
    } else {
        -1.0
    };

    // Walk outward rays, one GSD per step, up to the probe distance.
    let steps = (config.probe_dist_m / georef.gsd).ceil() as usize;
    let mut probed = 0usize;
    let mut hits = 0usize;
    for entry in normals.iter().flatten() {
        let (p, normal) = *entry;
        probed += 1;
        let hit = (1..=steps).any(|s| {
            let q = Point2::new(
                p.x + sign * normal.x * s as f64,
                p.y + sign * normal.y * s as f64,
            );
            class_at(q) == Some(Class::Walkway)
        });
        if hit {
            hits += 1;
        }
    }
    if probed > 0 && hits as f64 / probed as f64 >= config.walkway_fraction {
        BorderKind::Curbstone
    } else {
        BorderKind::RoadBorder
    }
}

/// Full border stage: mask cleanup, extraction and classification.
pub fn extract_road_borders(
    mask: &SemanticMask,
    georef: &GeoReference,
    config: &PipelineConfig,
) -> Vec<RoadBorder> {
    let drivable = drivable_mask(mask);
    let filled = fill_small_holes(&drivable, config.border_fill_hole_px);
    extract_borders(&filled, georef, config)
        .into_iter()
        .map(|line| {
            let kind = classify_border(&line, mask, georef, config);
            RoadBorder { line, kind }
        })
        .collect()
}
