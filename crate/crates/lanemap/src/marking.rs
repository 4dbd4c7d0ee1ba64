//! Lane-marking extraction: centerlines from the skeletonized marking mask,
//! split at branch points and sharp corners, plus dash detection, iterative
//! dash grouping and the final solid/dashed classification.

use std::collections::HashSet;
use std::f64::consts::PI;

use crate::config::PipelineConfig;
use crate::geometry::{self, axial_difference, Point2, Polyline, Unit};
use crate::georef::GeoReference;
use crate::raster::{
    class_mask, connected_components, is_thin, neighbor_count, skeletonize, BinaryMask, Class,
    ComponentSet, Connectivity, RasterError, SemanticMask,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingKind {
    Solid,
    Dashed,
}

impl MarkingKind {
    pub fn tag(self) -> &'static str {
        match self {
            MarkingKind::Solid => "solid",
            MarkingKind::Dashed => "dashed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LaneMarking {
    pub line: Polyline,
    pub kind: MarkingKind,
    /// Component labels of the member dashes; empty for solid markings.
    pub member_dashes: Vec<u32>,
}

/// One short marking component, measured by principal-component analysis of
/// its pixel coordinates in UTM metres.
#[derive(Debug, Clone)]
pub struct DashComponent {
    /// Label in the marking-mask component set.
    pub label: u32,
    pub centroid: Point2,
    /// Extent along the principal axis, plus one pixel footprint.
    pub length: f64,
    /// Axial orientation in [0, pi).
    pub orientation: f64,
    pub pixel_count: usize,
}

/// A skeleton path: ordered pixels between two nodes (endpoints or
/// junctions), or a closed loop.
#[derive(Debug, Clone)]
pub struct SkeletonPath {
    pub pixels: Vec<(usize, usize)>,
    pub closed: bool,
}

/// Decomposes a 1-px-thin skeleton into maximal paths whose interior pixels
/// all have exactly two neighbors. Junction pixels (three or more neighbors)
/// terminate paths and are shared by every incident path.
pub fn split_at_branches(skeleton: &BinaryMask) -> Result<Vec<SkeletonPath>, RasterError> {
    let (w, h) = (skeleton.width(), skeleton.height());
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            if skeleton.get(x, y)
                && skeleton.get(x + 1, y)
                && skeleton.get(x, y + 1)
                && skeleton.get(x + 1, y + 1)
            {
                return Err(RasterError::NotThin { x, y });
            }
        }
    }

    let neighbors = |x: usize, y: usize| -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(8);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if skeleton.get_checked(nx, ny) {
                    out.push((nx as usize, ny as usize));
                }
            }
        }
        out
    };
    let degree = |x: usize, y: usize| neighbor_count(skeleton, x, y).unwrap_or(0);

    let mut paths = Vec::new();
    let mut used_steps: HashSet<((usize, usize), (usize, usize))> = HashSet::new();
    let mut on_path = vec![false; w * h];

    // Paths out of every node (degree != 2 pixel).
    for y in 0..h {
        for x in 0..w {
            if !skeleton.get(x, y) || degree(x, y) == 2 {
                continue;
            }
            let start = (x, y);
            on_path[y * w + x] = true;
            if degree(x, y) == 0 {
                paths.push(SkeletonPath {
                    pixels: vec![start],
                    closed: false,
                });
                continue;
            }
            for first in neighbors(x, y) {
                if used_steps.contains(&(start, first)) {
                    continue;
                }
                let mut pixels = vec![start];
                used_steps.insert((start, first));
                let (mut prev, mut cur) = (start, first);
                loop {
                    pixels.push(cur);
                    on_path[cur.1 * w + cur.0] = true;
                    if degree(cur.0, cur.1) != 2 {
                        used_steps.insert((cur, prev));
                        break;
                    }
                    let next = neighbors(cur.0, cur.1)
                        .into_iter()
                        .find(|&q| q != prev)
                        .expect("degree-2 pixel has a second neighbor");
                    prev = cur;
                    cur = next;
                }
                paths.push(SkeletonPath {
                    pixels,
                    closed: false,
                });
            }
        }
    }

    // Leftover pixels are pure cycles (every pixel degree 2).
    for y in 0..h {
        for x in 0..w {
            if !skeleton.get(x, y) || on_path[y * w + x] {
                continue;
            }
            let start = (x, y);
            let mut pixels = vec![start];
            on_path[y * w + x] = true;
            let mut prev = start;
            let mut cur = neighbors(x, y)[0];
            while cur != start {
                pixels.push(cur);
                on_path[cur.1 * w + cur.0] = true;
                let next = neighbors(cur.0, cur.1)
                    .into_iter()
                    .find(|&q| q != prev)
                    .expect("cycle pixel has a second neighbor");
                prev = cur;
                cur = next;
            }
            paths.push(SkeletonPath {
                pixels,
                closed: true,
            });
        }
    }
    Ok(paths)
}

/// Splits a centerline at sharp corners (stop lines meet lane lines at around
/// 90 degrees), using a smoothed turn estimate over a 3-segment window to
/// survive pixel staircase noise.
pub fn split_right_angles(pl: &Polyline, corner_turn_deg: f64) -> Vec<Polyline> {
    geometry::split_on_smoothed_orientation(pl, corner_turn_deg, 3)
        .unwrap_or_else(|_| vec![pl.clone()])
}

/// Principal-axis measurement of marking components; those sized like a dash
/// become [`DashComponent`]s.
pub fn detect_dashes(
    cs: &ComponentSet,
    georef: &GeoReference,
    config: &PipelineConfig,
) -> Vec<DashComponent> {
    let mut out = Vec::new();
    for comp in cs.components() {
        let pts: Vec<Point2> = comp
            .pixels
            .iter()
            .map(|&(x, y)| georef.pixel_point_to_utm(Point2::new(x as f64, y as f64)))
            .collect();
        let (centroid, axis, _) = principal_axis(&pts);
        let (mut min_a, mut max_a, mut min_b, mut max_b) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        let normal = Point2::new(-axis.y, axis.x);
        for p in &pts {
            let d = Point2::new(p.x - centroid.x, p.y - centroid.y);
            let along = d.x * axis.x + d.y * axis.y;
            let across = d.x * normal.x + d.y * normal.y;
            min_a = min_a.min(along);
            max_a = max_a.max(along);
            min_b = min_b.min(across);
            max_b = max_b.max(across);
        }
        let length = (max_a - min_a) + georef.gsd;
        let width = (max_b - min_b) + georef.gsd;
        if length < config.dash_min_len_m || length > config.dash_max_len_m {
            continue;
        }
        if width > config.dash_max_width_m {
            continue;
        }
        let mut orientation = axis.y.atan2(axis.x);
        if orientation < 0.0 {
            orientation += PI;
        }
        if orientation >= PI {
            orientation -= PI;
        }
        out.push(DashComponent {
            label: comp.label,
            centroid,
            length,
            orientation,
            pixel_count: comp.pixel_count,
        });
    }
    out
}

fn principal_axis(pts: &[Point2]) -> (Point2, Point2, f64) {
    geometry::principal_axis(pts).expect("non-empty point set")
}

/// Greedy iterative dash grouping. Seeds are processed by descending dash
/// length (centroid order breaking ties); a group repeatedly absorbs the
/// nearest ungrouped dash that matches the group's mean length and axial
/// orientation and lies along the local axis rather than on a parallel chain.
pub fn group_dashes(dashes: &[DashComponent], config: &PipelineConfig) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..dashes.len()).collect();
    order.sort_by(|&a, &b| {
        dashes[b]
            .length
            .partial_cmp(&dashes[a].length)
            .unwrap()
            .then(
                dashes[a]
                    .centroid
                    .x
                    .partial_cmp(&dashes[b].centroid.x)
                    .unwrap(),
            )
            .then(
                dashes[a]
                    .centroid
                    .y
                    .partial_cmp(&dashes[b].centroid.y)
                    .unwrap(),
            )
    });

    let angle_tol = config.dash_angle_tol_deg.to_radians();
    let mut grouped = vec![false; dashes.len()];
    let mut groups = Vec::new();

    for &seed in &order {
        if grouped[seed] {
            continue;
        }
        grouped[seed] = true;
        let mut members = vec![seed];
        let mut mean_len = dashes[seed].length;

        loop {
            let mut best: Option<(usize, f64)> = None;
            for (idx, dash) in dashes.iter().enumerate() {
                if grouped[idx] {
                    continue;
                }
                // Nearest member and distance to it.
                let (nearest, dist) = members
                    .iter()
                    .map(|&m| (m, dashes[m].centroid.distance(&dash.centroid)))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                if dist > config.dash_gap_max_m {
                    continue;
                }
                if (dash.length - mean_len).abs() > config.dash_len_tol * mean_len {
                    continue;
                }
                // The orientation gate is local: a dashed line following a
                // curve drifts arbitrarily far from the group's mean
                // orientation while staying aligned with its neighbor.
                if axial_difference(dash.orientation, dashes[nearest].orientation) > angle_tol {
                    continue;
                }
                // Projection test: the candidate must sit along the nearest
                // member's axis, not on a parallel chain beside it.
                let m = &dashes[nearest];
                let dir = Point2::new(m.orientation.cos(), m.orientation.sin());
                let connect = Point2::new(
                    dash.centroid.x - m.centroid.x,
                    dash.centroid.y - m.centroid.y,
                );
                let lateral = (connect.x * -dir.y + connect.y * dir.x).abs();
                if lateral > config.dash_lateral_tol_m {
                    continue;
                }
                if best.map(|(_, bd)| dist < bd).unwrap_or(true) {
                    best = Some((idx, dist));
                }
            }
            let Some((idx, _)) = best else { break };
            grouped[idx] = true;
            members.push(idx);
            let k = members.len() as f64;
            mean_len += (dashes[idx].length - mean_len) / k;
        }
        groups.push(members);
    }
    groups
}

/// Builds the final marking list: every dash group of two or more becomes one
/// dashed marking through its centroids, every remaining skeleton path stays
/// a solid marking.
pub fn classify_markings(
    solids: Vec<Polyline>,
    dash_groups: &[Vec<usize>],
    dashes: &[DashComponent],
) -> Vec<LaneMarking> {
    let mut out = Vec::new();
    for group in dash_groups {
        if group.len() < 2 {
            continue;
        }
        let centroids: Vec<Point2> = group.iter().map(|&i| dashes[i].centroid).collect();
        let (centroid, axis, _) = principal_axis(&centroids);
        let mut keyed: Vec<(f64, usize)> = group
            .iter()
            .map(|&i| {
                let d = dashes[i].centroid;
                ((d.x - centroid.x) * axis.x + (d.y - centroid.y) * axis.y, i)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let line = Polyline::dedup(
            keyed.iter().map(|&(_, i)| dashes[i].centroid).collect(),
            false,
            Unit::Metre,
        );
        if let Some(line) = line {
            out.push(LaneMarking {
                line,
                kind: MarkingKind::Dashed,
                member_dashes: keyed.iter().map(|&(_, i)| dashes[i].label).collect(),
            });
        }
    }
    for line in solids {
        out.push(LaneMarking {
            line,
            kind: MarkingKind::Solid,
            member_dashes: Vec::new(),
        });
    }
    out
}

/// Full marking stage over a semantic mask.
pub fn extract_lane_markings(
    mask: &SemanticMask,
    georef: &GeoReference,
    config: &PipelineConfig,
) -> Result<Vec<LaneMarking>, RasterError> {
    let marking_mask = class_mask(mask, &[Class::LaneMarking]);
    let cs = connected_components(&marking_mask, Connectivity::Eight);
    let kept = cs.filter_by_size(config.min_component_px, usize::MAX);
    let mut retained = BinaryMask::empty(mask.width(), mask.height());
    for comp in kept.components() {
        for &(x, y) in &comp.pixels {
            retained.set(x, y, true);
        }
    }

    let dashes = detect_dashes(&kept, georef, config);
    let groups = group_dashes(&dashes, config);
    let absorbed: HashSet<u32> = groups
        .iter()
        .filter(|g| g.len() >= 2)
        .flat_map(|g| g.iter().map(|&i| dashes[i].label))
        .collect();

    let skeleton = skeletonize(&retained);
    debug_assert!(is_thin(&skeleton));
    let paths = split_at_branches(&skeleton)?;

    let mut solids = Vec::new();
    for path in paths {
        if path.pixels.len() < 2 {
            continue;
        }
        let (px, py) = path.pixels[0];
        if absorbed.contains(&kept.label_at(px, py)) {
            continue;
        }
        let metric: Vec<Point2> = path
            .pixels
            .iter()
            .map(|&(x, y)| georef.pixel_point_to_utm(Point2::new(x as f64, y as f64)))
            .collect();
        let Some(pl) = Polyline::dedup(metric, path.closed, Unit::Metre) else {
            continue;
        };
        let Ok(simplified) = geometry::simplify(&pl, config.simplify_tolerance_m) else {
            continue;
        };
        for part in split_right_angles(&simplified, config.marking_corner_turn_deg) {
            if part.arc_length() >= config.marking_min_len_m {
                solids.push(part);
            }
        }
    }
    Ok(classify_markings(solids, &groups, &dashes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::Hemisphere;

    fn georef() -> GeoReference {
        GeoReference::new(32, Hemisphere::North, 294000.0, 5628000.0, 0.05).unwrap()
    }

    fn skeleton_from(pixels: &[(usize, usize)], w: usize, h: usize) -> BinaryMask {
        let mut m = BinaryMask::empty(w, h);
        for &(x, y) in pixels {
            m.set(x, y, true);
        }
        m
    }

    #[test]
    fn straight_line_is_one_path() {
        let pixels: Vec<(usize, usize)> = (2..18).map(|x| (x, 5)).collect();
        let paths = split_at_branches(&skeleton_from(&pixels, 20, 10)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].pixels.len(), 16);
        assert!(!paths[0].closed);
    }

    #[test]
    fn y_junction_yields_three_paths_sharing_the_junction() {
        // Vertical stem up to (10, 10), arms to upper-left and upper-right.
        let mut pixels: Vec<(usize, usize)> = (11..18).map(|y| (10, y)).collect();
        pixels.push((10, 10));
        pixels.extend((1..=5).map(|i| (10 - i, 10 - i)));
        pixels.extend((1..=5).map(|i| (10 + i, 10 - i)));
        let paths = split_at_branches(&skeleton_from(&pixels, 24, 24)).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            assert!(p.pixels.contains(&(10, 10)));
        }
    }

    #[test]
    fn t_junction_yields_three_paths() {
        // A horizontal stem meeting a diagonal crossbar: the only way three
        // arms can meet in one pixel under 8-connectivity is with pairwise
        // non-adjacent first arm pixels.
        let mut pixels: Vec<(usize, usize)> = (2..=9).map(|x| (x, 10)).collect();
        pixels.push((10, 10));
        pixels.extend((1..=6).map(|i| (10 + i, 10 - i)));
        pixels.extend((1..=6).map(|i| (10 + i, 10 + i)));
        let paths = split_at_branches(&skeleton_from(&pixels, 24, 24)).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            assert!(p.pixels.contains(&(10, 10)));
        }
    }

    #[test]
    fn x_crossing_yields_four_paths() {
        let mut pixels = vec![(10, 10)];
        for i in 1..=6 {
            pixels.push((10 - i, 10 - i));
            pixels.push((10 + i, 10 - i));
            pixels.push((10 - i, 10 + i));
            pixels.push((10 + i, 10 + i));
        }
        let paths = split_at_branches(&skeleton_from(&pixels, 24, 24)).unwrap();
        assert_eq!(paths.len(), 4);
        for p in &paths {
            assert!(p.pixels.contains(&(10, 10)));
        }
    }

    #[test]
    fn closed_loop_is_one_closed_path() {
        // Diamond ring: every pixel has exactly two (diagonal) neighbors.
        let (c, r) = (10i64, 6i64);
        let mut pixels = Vec::new();
        for x in -r..=r {
            let y = r - x.abs();
            pixels.push(((c + x) as usize, (c + y) as usize));
            if y != 0 {
                pixels.push(((c + x) as usize, (c - y) as usize));
            }
        }
        let paths = split_at_branches(&skeleton_from(&pixels, 20, 20)).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(paths[0].closed);
        assert_eq!(paths[0].pixels.len(), pixels.len());
    }

    #[test]
    fn non_thin_input_is_rejected() {
        let pixels = [(3, 3), (4, 3), (3, 4), (4, 4)];
        match split_at_branches(&skeleton_from(&pixels, 8, 8)) {
            Err(RasterError::NotThin { .. }) => {}
            other => panic!("expected NotThin, got {other:?}"),
        }
    }

    #[test]
    fn every_skeleton_pixel_lands_on_a_path() {
        let mut pixels: Vec<(usize, usize)> = (2..19).map(|x| (x, 8)).collect();
        pixels.extend((2..8).map(|y| (9, y)));
        pixels.extend((9..14).map(|y| (14, y)));
        let skel = skeleton_from(&pixels, 24, 16);
        let paths = split_at_branches(&skel).unwrap();
        let covered: HashSet<(usize, usize)> = paths
            .iter()
            .flat_map(|p| p.pixels.iter().copied())
            .collect();
        let expected: HashSet<(usize, usize)> = pixels.iter().copied().collect();
        assert_eq!(covered, expected);
        // Interior path pixels have exactly two neighbors.
        for p in &paths {
            for &(x, y) in &p.pixels[1..p.pixels.len().saturating_sub(1)] {
                if !p.closed {
                    assert_eq!(neighbor_count(&skel, x, y).unwrap(), 2);
                }
            }
        }
    }

    fn dash_at(
        georef: &GeoReference,
        cx: f64,
        cy: f64,
        len_px: usize,
        width_px: usize,
    ) -> Vec<(usize, usize)> {
        let _ = georef;
        let (x0, y0) = (cx as usize - len_px / 2, cy as usize - width_px / 2);
        let mut out = Vec::new();
        for y in y0..y0 + width_px {
            for x in x0..x0 + len_px {
                out.push((x, y));
            }
        }
        out
    }

    #[test]
    fn dash_detection_measures_length_and_orientation() {
        let g = georef();
        let config = PipelineConfig::default();
        // 40x3 px horizontal bar = 2.0 m dash at 5 cm GSD.
        let mut mask = BinaryMask::empty(100, 40);
        for (x, y) in dash_at(&g, 50.0, 20.0, 40, 3) {
            mask.set(x, y, true);
        }
        let cs = connected_components(&mask, Connectivity::Eight);
        let dashes = detect_dashes(&cs, &g, &config);
        assert_eq!(dashes.len(), 1);
        let d = &dashes[0];
        assert!((d.length - 2.0).abs() < 0.051, "length {}", d.length);
        assert!(d.orientation < 0.02 || (PI - d.orientation) < 0.02);
    }

    #[test]
    fn dash_filter_rejects_long_lines_and_specks() {
        let g = georef();
        let config = PipelineConfig::default();
        let mut mask = BinaryMask::empty(700, 60);
        // 30 m solid line (600 px).
        for (x, y) in dash_at(&g, 320.0, 10.0, 600, 3) {
            mask.set(x, y, true);
        }
        // 2 px speck.
        mask.set(20, 40, true);
        mask.set(21, 40, true);
        let cs = connected_components(&mask, Connectivity::Eight);
        let dashes = detect_dashes(&cs, &g, &config);
        assert!(dashes.is_empty());
    }

    fn synthetic_dash(centroid: (f64, f64), length: f64, orientation: f64) -> DashComponent {
        DashComponent {
            label: 0,
            centroid: Point2::new(centroid.0, centroid.1),
            length,
            orientation,
            pixel_count: 100,
        }
    }

    #[test]
    fn collinear_dashes_form_one_group() {
        let config = PipelineConfig::default();
        let dashes: Vec<DashComponent> = (0..5)
            .map(|i| synthetic_dash((i as f64 * 5.0, 0.0), 2.0, 0.0))
            .collect();
        let groups = group_dashes(&dashes, &config);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].len(), 5);
    }

    #[test]
    fn parallel_chains_stay_separate() {
        let config = PipelineConfig::default();
        let mut dashes = Vec::new();
        for i in 0..4 {
            dashes.push(synthetic_dash((i as f64 * 5.0, 0.0), 2.0, 0.0));
            dashes.push(synthetic_dash((i as f64 * 5.0, 3.5), 2.0, 0.0));
        }
        let groups = group_dashes(&dashes, &config);
        assert_eq!(groups.len(), 2);
        assert!(groups.iter().all(|g| g.len() == 4));
    }

    #[test]
    fn single_dash_is_a_singleton_group() {
        let config = PipelineConfig::default();
        let groups = group_dashes(&[synthetic_dash((0.0, 0.0), 2.0, 0.0)], &config);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].len(), 1);
    }

    /// Transitive closure over pairwise compatibility, as an independent
    /// grouping oracle for well-separated chains.
    fn oracle_groups(dashes: &[DashComponent], config: &PipelineConfig) -> Vec<Vec<usize>> {
        let n = dashes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&dashes[i], &dashes[j]);
                let dist = a.centroid.distance(&b.centroid);
                let len_ok =
                    (a.length - b.length).abs() <= config.dash_len_tol * a.length.max(b.length);
                let ang_ok = axial_difference(a.orientation, b.orientation)
                    <= config.dash_angle_tol_deg.to_radians();
                let dir = Point2::new(a.orientation.cos(), a.orientation.sin());
                let connect = Point2::new(b.centroid.x - a.centroid.x, b.centroid.y - a.centroid.y);
                let lateral = (connect.x * -dir.y + connect.y * dir.x).abs();
                if dist <= config.dash_gap_max_m
                    && len_ok
                    && ang_ok
                    && lateral <= config.dash_lateral_tol_m
                {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = find(&mut parent, i);
            by_root.entry(r).or_default().push(i);
        }
        by_root.into_values().collect()
    }

    #[test]
    fn grouping_matches_oracle_and_is_order_insensitive() {
        let config = PipelineConfig::default();
        // Two well-separated chains (15 m apart, > 2 * gap_max).
        let mut dashes = Vec::new();
        for i in 0..5 {
            dashes.push(synthetic_dash((i as f64 * 4.0, 0.0), 2.0, 0.0));
        }
        for i in 0..4 {
            dashes.push(synthetic_dash((i as f64 * 4.0, 15.0), 1.8, 0.05));
        }
        let to_sets =
            |groups: Vec<Vec<usize>>, dashes: &[DashComponent]| -> HashSet<Vec<(i64, i64)>> {
                groups
                    .into_iter()
                    .map(|g| {
                        let mut v: Vec<(i64, i64)> = g
                            .iter()
                            .map(|&i| {
                                (
                                    (dashes[i].centroid.x * 1000.0) as i64,
                                    (dashes[i].centroid.y * 1000.0) as i64,
                                )
                            })
                            .collect();
                        v.sort();
                        v
                    })
                    .collect()
            };
        let ours = to_sets(group_dashes(&dashes, &config), &dashes);
        let oracle = to_sets(oracle_groups(&dashes, &config), &dashes);
        assert_eq!(ours, oracle);
        // Permuted input gives the same partition.
        let mut permuted = dashes.clone();
        permuted.reverse();
        permuted.swap(0, 3);
        let again = to_sets(group_dashes(&permuted, &config), &permuted);
        assert_eq!(again, ours);
    }

    #[test]
    fn grouping_is_a_partition() {
        let config = PipelineConfig::default();
        let dashes: Vec<DashComponent> = (0..7)
            .map(|i| synthetic_dash((i as f64 * 3.0, (i % 3) as f64 * 8.0), 2.0, 0.0))
            .collect();
        let groups = group_dashes(&dashes, &config);
        let mut seen = vec![0usize; dashes.len()];
        for g in &groups {
            for &i in g {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn dashed_marking_line_is_monotonic_along_axis() {
        let config = PipelineConfig::default();
        let dashes: Vec<DashComponent> = (0..5)
            .map(|i| synthetic_dash((i as f64 * 4.0, 0.1 * (i % 2) as f64), 2.0, 0.0))
            .collect();
        let groups = group_dashes(&dashes, &config);
        let markings = classify_markings(Vec::new(), &groups, &dashes);
        assert_eq!(markings.len(), 1);
        let m = &markings[0];
        assert_eq!(m.kind, MarkingKind::Dashed);
        assert_eq!(m.member_dashes.len(), 5);
        let xs: Vec<f64> = m.line.points().iter().map(|p| p.x).collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn solid_and_dashed_stage_on_painted_mask() {
        let g = georef();
        let config = PipelineConfig::default();
        let mut mask = SemanticMask::filled(400, 120, Class::Road).unwrap();
        // Solid line: 18 m at y=20 px.
        for x in 20..380 {
            for y in 19..22 {
                mask.set_class(x, y, Class::LaneMarking);
            }
        }
        // Dash chain: 2 m dashes, 2 m gaps at y=60 px.
        let mut dash_count = 0;
        let mut x = 20;
        while x + 40 < 380 {
            for dx in 0..40 {
                for y in 59..62 {
                    mask.set_class(x + dx, y, Class::LaneMarking);
                }
            }
            dash_count += 1;
            x += 80;
        }
        // Second solid line at y=100 px.
        for x in 20..380 {
            for y in 99..102 {
                mask.set_class(x, y, Class::LaneMarking);
            }
        }
        let markings = extract_lane_markings(&mask, &g, &config).unwrap();
        let solids: Vec<_> = markings
            .iter()
            .filter(|m| m.kind == MarkingKind::Solid)
            .collect();
        let dashed: Vec<_> = markings
            .iter()
            .filter(|m| m.kind == MarkingKind::Dashed)
            .collect();
        assert_eq!(solids.len(), 2);
        assert_eq!(dashed.len(), 1);
        assert_eq!(dashed[0].member_dashes.len(), dash_count);
        // Centerline accuracy: the solid at y=20 px has its centerline at
        // pixel row 20, i.e. northing origin - 20.5 * gsd.
        let expected_n = 5628000.0 - 20.5 * 0.05;
        let first_solid = solids
            .iter()
            .find(|m| {
                let mean: f64 =
                    m.line.points().iter().map(|p| p.y).sum::<f64>() / m.line.len() as f64;
                (mean - expected_n).abs() < 0.1
            })
            .expect("solid near y=20 px");
        for p in first_solid.line.points() {
            assert!(
                (p.y - expected_n).abs() <= 0.05 + 1e-9,
                "deviation {}",
                p.y - expected_n
            );
        }
    }

    #[test]
    fn stop_line_splits_from_lane_line() {
        let g = georef();
        let config = PipelineConfig::default();
        let mut mask = SemanticMask::filled(300, 150, Class::Road).unwrap();
        // Lane line along x then a perpendicular stop line.
        for x in 20..200 {
            for y in 70..73 {
                mask.set_class(x, y, Class::LaneMarking);
            }
        }
        for y in 20..121 {
            for x in 200..203 {
                mask.set_class(x, y, Class::LaneMarking);
            }
        }
        let markings = extract_lane_markings(&mask, &g, &config).unwrap();
        // The junction splits the cross into a horizontal piece and two
        // vertical pieces; all solid.
        assert!(markings.len() >= 3, "got {}", markings.len());
        assert!(markings.iter().all(|m| m.kind == MarkingKind::Solid));
    }
}
