//! Procedurally drawn road-arrow archetypes, shared by the template
//! classifier and the synthetic scene generator.
//!
//! Shapes live in a unit space (x right, y up, arrow pointing up) as unions
//! of convex polygons and are rasterized by point-in-polygon tests, so the
//! same routine draws crisp arrows at any pixel scale and rotation.

use super::SymbolClass;
use crate::raster::BinaryMask;

type Poly = Vec<(f64, f64)>;

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Poly {
    vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
}

fn mirror_x(polys: &[Poly]) -> Vec<Poly> {
    polys
        .iter()
        .map(|p| p.iter().map(|&(x, y)| (-x, y)).collect())
        .collect()
}

/// Unit-space outline of a directional arrow.
pub fn arrow_polygons(class: SymbolClass) -> Vec<Poly> {
    let shaft_full = rect(-0.14, -1.0, 0.14, 0.5);
    let head_up: Poly = vec![(-0.45, 0.5), (0.45, 0.5), (0.0, 1.0)];
    let left: Vec<Poly> = vec![
        rect(-0.14, -1.0, 0.14, 0.45),
        rect(-0.60, 0.18, 0.14, 0.45),
        vec![(-1.0, 0.315), (-0.60, 0.01), (-0.60, 0.62)],
    ];
    let straight_or_left: Vec<Poly> = vec![
        shaft_full.clone(),
        vec![(-0.42, 0.5), (0.42, 0.5), (0.0, 1.0)],
        rect(-0.62, -0.12, -0.10, 0.14),
        vec![(-1.0, 0.01), (-0.62, -0.28), (-0.62, 0.30)],
    ];
    match class {
        SymbolClass::Straight => vec![shaft_full, head_up],
        SymbolClass::Left => left,
        SymbolClass::Right => mirror_x(&arrow_polygons(SymbolClass::Left)),
        SymbolClass::StraightOrLeft => straight_or_left,
        SymbolClass::StraightOrRight => mirror_x(&arrow_polygons(SymbolClass::StraightOrLeft)),
        SymbolClass::LeftOrRight => vec![
            rect(-0.14, -1.0, 0.14, 0.15),
            rect(-0.62, 0.15, 0.62, 0.42),
            vec![(-1.0, 0.285), (-0.62, -0.02), (-0.62, 0.59)],
            vec![(1.0, 0.285), (0.62, 0.59), (0.62, -0.02)],
        ],
        SymbolClass::Other => Vec::new(),
    }
}

fn point_in_convex(p: (f64, f64), poly: &Poly) -> bool {
    let n = poly.len();
    let mut sign = 0i8;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
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

fn rotate(p: (f64, f64), angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (p.0 * c - p.1 * s, p.0 * s + p.1 * c)
}

fn rasterize(polys: &[Poly], width_px: usize, height_px: usize, rotation: f64) -> BinaryMask {
    let rotated: Vec<Poly> = polys
        .iter()
        .map(|p| p.iter().map(|&v| rotate(v, rotation)).collect())
        .collect();
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for poly in &rotated {
        for &(x, y) in poly {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
    }
    BinaryMask::from_fn(width_px, height_px, |px, py| {
        let ux = min_x + (px as f64 + 0.5) / width_px as f64 * (max_x - min_x);
        // Raster y grows downward, unit y grows upward.
        let uy = max_y - (py as f64 + 0.5) / height_px as f64 * (max_y - min_y);
        rotated.iter().any(|poly| point_in_convex((ux, uy), poly))
    })
}

/// Draws a directional arrow filling a `width_px` x `height_px` canvas,
/// rotated by `rotation` radians (counter-clockwise in the unit frame).
/// `Other` draws nothing. The shape is stretched to fill the canvas; use
/// [`draw_arrow_scaled`] for an undistorted render at arbitrary rotations.
pub fn draw_arrow(
    class: SymbolClass,
    width_px: usize,
    height_px: usize,
    rotation: f64,
) -> BinaryMask {
    let polys = arrow_polygons(class);
    if polys.is_empty() {
        return BinaryMask::empty(width_px, height_px);
    }
    rasterize(&polys, width_px, height_px, rotation)
}

/// Draws a rotated arrow at `px_per_unit` pixels per unit coordinate with
/// the canvas sized to the rotated outline, so the shape is never distorted.
pub fn draw_arrow_scaled(class: SymbolClass, px_per_unit: f64, rotation: f64) -> BinaryMask {
    let polys = arrow_polygons(class);
    if polys.is_empty() {
        return BinaryMask::empty(1, 1);
    }
    let (w, h) = rotated_canvas(&polys, px_per_unit, rotation);
    rasterize(&polys, w, h, rotation)
}

/// Undistorted render of an `other` shape (see [`draw_other_shape`]).
pub fn draw_other_shape_scaled(variant: usize, px_per_unit: f64, rotation: f64) -> BinaryMask {
    let polys = other_shape_polygons(variant);
    let (w, h) = rotated_canvas(&polys, px_per_unit, rotation);
    rasterize(&polys, w, h, rotation)
}

fn rotated_canvas(polys: &[Poly], px_per_unit: f64, rotation: f64) -> (usize, usize) {
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for poly in polys {
        for &v in poly {
            let (x, y) = rotate(v, rotation);
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
    }
    (
        (((max_x - min_x) * px_per_unit).round() as usize).max(2),
        (((max_y - min_y) * px_per_unit).round() as usize).max(2),
    )
}

/// Canvas aspect (width / height) of a class's un-rotated outline; lets
/// callers pick pixel canvases that do not distort the shape.
pub fn arrow_aspect(class: SymbolClass) -> f64 {
    let polys = arrow_polygons(class);
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for poly in &polys {
        for &(x, y) in poly {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
    }
    if min_x.is_finite() {
        (max_x - min_x) / (max_y - min_y)
    } else {
        1.0
    }
}

fn other_shape_polygons(variant: usize) -> Vec<Poly> {
    match variant % 5 {
        // Solid block.
        0 => vec![rect(-0.6, -1.0, 0.6, 1.0)],
        // H shape.
        1 => vec![
            rect(-0.65, -1.0, -0.30, 1.0),
            rect(0.30, -1.0, 0.65, 1.0),
            rect(-0.65, -0.18, 0.65, 0.18),
        ],
        // Diamond.
        2 => vec![vec![(0.0, -1.0), (0.7, 0.0), (0.0, 1.0), (-0.7, 0.0)]],
        // Three parallel bars (zebra fragment).
        3 => vec![
            rect(-0.7, -0.9, 0.7, -0.45),
            rect(-0.7, -0.2, 0.7, 0.25),
            rect(-0.7, 0.5, 0.7, 0.95),
        ],
        // Hexagonal blob.
        _ => vec![vec![
            (0.0, -1.0),
            (0.62, -0.5),
            (0.62, 0.5),
            (0.0, 1.0),
            (-0.62, 0.5),
            (-0.62, -0.5),
        ]],
    }
}

/// Non-arrow ground symbols (bus-stop blocks, zebra fragments and the like)
/// used to exercise the `other` rejection class. `variant` selects a shape.
pub fn draw_other_shape(
    variant: usize,
    width_px: usize,
    height_px: usize,
    rotation: f64,
) -> BinaryMask {
    rasterize(
        &other_shape_polygons(variant),
        width_px,
        height_px,
        rotation,
    )
}
