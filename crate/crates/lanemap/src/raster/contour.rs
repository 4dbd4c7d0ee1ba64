//! Moore-neighborhood boundary tracing with hole detection.
//!
//! Each 8-connected foreground component yields one outer contour plus one
//! contour per enclosed background hole (background is 4-connected; pixels
//! outside the raster count as background). Winding is normalized so that
//! outer contours run counter-clockwise and holes clockwise once y is flipped
//! into a y-up metric frame.

use super::{connected_components, BinaryMask, ComponentSet, Connectivity, NEIGHBORS_8};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourKind {
    Outer,
    Hole,
}

/// Closed pixel chain along a component boundary. The closing edge from the
/// last point back to the first is implicit.
#[derive(Debug, Clone)]
pub struct Contour {
    pub points: Vec<(usize, usize)>,
    pub kind: ContourKind,
    /// Label of the foreground component this contour belongs to.
    pub component: u32,
}

impl Contour {
    /// Shoelace area in pixel coordinates (x right, y down). Positive values
    /// are clockwise on screen, i.e. counter-clockwise once y is flipped up.
    pub fn signed_area_pixel(&self) -> f64 {
        let pts = &self.points;
        let mut acc = 0.0;
        for i in 0..pts.len() {
            let (ax, ay) = pts[i];
            let (bx, by) = pts[(i + 1) % pts.len()];
            acc += ax as f64 * by as f64 - bx as f64 * ay as f64;
        }
        acc / 2.0
    }
}

/// Traces the boundaries of every component of `mask`.
pub fn trace_contours(mask: &BinaryMask) -> Vec<Contour> {
    let fg = connected_components(mask, Connectivity::Eight);
    trace_component_contours(mask, &fg)
}

/// Same as [`trace_contours`] but reuses an existing component labeling.
pub fn trace_component_contours(mask: &BinaryMask, fg: &ComponentSet) -> Vec<Contour> {
    let (w, h) = (mask.width(), mask.height());
    let mut contours = Vec::new();

    // Outer contour per component, seeded at its first raster-scan pixel.
    for comp in fg.components() {
        let (sx, sy) = comp.pixels[0];
        let points = moore_trace(
            |x, y| in_component(fg, comp.label, x, y),
            (sx, sy),
            (sx as i64 - 1, sy as i64),
        );
        contours.push(normalize(Contour {
            points,
            kind: ContourKind::Outer,
            component: comp.label,
        }));
    }

    // Background regions (4-connected) that do not touch the raster border
    // are holes; trace the foreground pixels around each.
    let inverse = BinaryMask::from_fn(w, h, |x, y| !mask.get(x, y));
    let bg = connected_components(&inverse, Connectivity::Four);
    for hole in bg.components() {
        let touches_border = hole
            .pixels
            .iter()
            .any(|&(x, y)| x == 0 || y == 0 || x == w - 1 || y == h - 1);
        if touches_border {
            continue;
        }
        // The pixel above the hole's topmost-leftmost pixel is foreground.
        let (hx, hy) = hole.pixels[0];
        debug_assert!(hy > 0 && mask.get(hx, hy - 1));
        let owner = fg.label_at(hx, hy - 1);
        let points = moore_trace(
            |x, y| in_component(fg, owner, x, y),
            (hx, hy - 1),
            (hx as i64, hy as i64),
        );
        contours.push(normalize(Contour {
            points,
            kind: ContourKind::Hole,
            component: owner,
        }));
    }

    contours.sort_by_key(|c| {
        (
            c.component,
            matches!(c.kind, ContourKind::Hole),
            c.points[0],
        )
    });
    contours
}

fn in_component(fg: &ComponentSet, label: u32, x: i64, y: i64) -> bool {
    if x < 0 || y < 0 || x as usize >= fg.width() || y as usize >= fg.height() {
        return false;
    }
    fg.label_at(x as usize, y as usize) == label
}

/// Index of offset `(dx, dy)` in the clockwise neighbor ring.
fn ring_index(dx: i64, dy: i64) -> usize {
    NEIGHBORS_8
        .iter()
        .position(|&d| d == (dx, dy))
        .expect("offset is not a ring neighbor")
}

/// Moore boundary trace from `start` with an initial background `backtrack`
/// cell. Terminates on Jacob's criterion: the walk is about to repeat the
/// first transition it made out of the start pixel.
fn moore_trace(
    in_region: impl Fn(i64, i64) -> bool,
    start: (usize, usize),
    backtrack: (i64, i64),
) -> Vec<(usize, usize)> {
    let next_move = |p: (usize, usize), b: (i64, i64)| -> Option<((usize, usize), (i64, i64))> {
        let (px, py) = (p.0 as i64, p.1 as i64);
        let start_idx = ring_index(b.0 - px, b.1 - py);
        let mut prev = b;
        for k in 1..=8 {
            let (dx, dy) = NEIGHBORS_8[(start_idx + k) % 8];
            let cand = (px + dx, py + dy);
            if in_region(cand.0, cand.1) {
                return Some(((cand.0 as usize, cand.1 as usize), prev));
            }
            prev = cand;
        }
        None
    };

    let mut points = vec![start];
    let Some((second, second_back)) = next_move(start, backtrack) else {
        return points; // isolated pixel
    };
    let (mut cur, mut back) = (second, second_back);
    // Guard against degenerate predicates; real boundaries are far shorter.
    for _ in 0..10_000_000u64 {
        if cur == start {
            match next_move(cur, back) {
                Some((next, nb)) => {
                    if next == second {
                        break;
                    }
                    points.push(cur);
                    cur = next;
                    back = nb;
                }
                None => break,
            }
            continue;
        }
        points.push(cur);
        match next_move(cur, back) {
            Some((next, nb)) => {
                cur = next;
                back = nb;
            }
            None => break,
        }
    }
    points
}

/// Enforces the winding convention (outer positive pixel-area, holes
/// negative) by reversing the point order when needed.
fn normalize(mut contour: Contour) -> Contour {
    if contour.points.len() < 3 {
        return contour;
    }
    let area = contour.signed_area_pixel();
    let want_positive = matches!(contour.kind, ContourKind::Outer);
    if (area < 0.0 && want_positive) || (area > 0.0 && !want_positive) {
        contour.points[1..].reverse();
    }
    contour
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn square_mask(w: usize, h: usize, x0: usize, y0: usize, side: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            x >= x0 && x < x0 + side && y >= y0 && y < y0 + side
        })
    }

    #[test]
    fn empty_mask_yields_no_contours() {
        assert!(trace_contours(&BinaryMask::empty(10, 10)).is_empty());
    }

    #[test]
    fn filled_square_has_36_boundary_pixels() {
        let mask = square_mask(14, 14, 2, 2, 10);
        let contours = trace_contours(&mask);
        assert_eq!(contours.len(), 1);
        assert_eq!(contours[0].kind, ContourKind::Outer);
        // Boundary-pixel enumeration oracle: set pixels with a background
        // 4-neighbor (or raster border).
        let expected: HashSet<(usize, usize)> = mask
            .iter_set()
            .filter(|&(x, y)| {
                [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)]
                    .iter()
                    .any(|&(dx, dy)| !mask.get_checked(x as i64 + dx, y as i64 + dy))
            })
            .collect();
        assert_eq!(expected.len(), 36);
        let visited: HashSet<(usize, usize)> = contours[0].points.iter().copied().collect();
        assert_eq!(visited, expected);
        assert_eq!(contours[0].points.len(), 36);
    }

    #[test]
    fn square_with_hole_yields_outer_and_hole() {
        let mut mask = square_mask(16, 16, 2, 2, 12);
        for y in 6..10 {
            for x in 6..10 {
                mask.set(x, y, false);
            }
        }
        let contours = trace_contours(&mask);
        assert_eq!(contours.len(), 2);
        assert_eq!(contours[0].kind, ContourKind::Outer);
        assert_eq!(contours[1].kind, ContourKind::Hole);
        assert!(contours[0].signed_area_pixel() > 0.0);
        assert!(contours[1].signed_area_pixel() < 0.0);
        // Hole contour pixels are foreground pixels around the cavity.
        for &(x, y) in &contours[1].points {
            assert!(mask.get(x, y));
            assert!(x >= 5 && x <= 10 && y >= 5 && y <= 10);
        }
    }

    #[test]
    fn contour_runs_along_tile_edge() {
        // A strip touching the raster border still traces.
        let mask = BinaryMask::from_fn(10, 4, |_, y| y < 2);
        let contours = trace_contours(&mask);
        assert_eq!(contours.len(), 1);
        assert!(contours[0].points.iter().any(|&(_, y)| y == 0));
    }

    proptest! {
        #[test]
        fn contour_invariants_on_random_masks(
            bits in proptest::collection::vec(proptest::bool::weighted(0.45), 20 * 20),
        ) {
            let mask = BinaryMask::from_fn(20, 20, |x, y| bits[y * 20 + x]);
            let fg = connected_components(&mask, Connectivity::Eight);
            let contours = trace_contours(&mask);
            let outer_count =
                contours.iter().filter(|c| c.kind == ContourKind::Outer).count();
            prop_assert_eq!(outer_count, fg.len());
            for c in &contours {
                for &(x, y) in &c.points {
                    prop_assert!(mask.get(x, y));
                    // Every emitted point is 4-adjacent to background/border.
                    let has_bg_4 = [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)]
                        .iter()
                        .any(|&(dx, dy)| !mask.get_checked(x as i64 + dx, y as i64 + dy));
                    prop_assert!(has_bg_4, "({}, {}) has no 4-adjacent background", x, y);
                }
            }
            // Shoelace area of each outer contour is within pixel-count +-
            // perimeter of its component.
            for c in contours.iter().filter(|c| c.kind == ContourKind::Outer) {
                if c.points.len() < 3 {
                    continue;
                }
                let comp = &fg.components()[c.component as usize - 1];
                let area = c.signed_area_pixel().abs();
                let perimeter = c.points.len() as f64;
                prop_assert!(
                    (area - comp.pixel_count as f64).abs() <= perimeter + 1.0,
                    "area {} vs pixels {} (perimeter {})",
                    area,
                    comp.pixel_count,
                    perimeter
                );
            }
        }
    }
}
