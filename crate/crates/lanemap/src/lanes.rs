//! Heuristic lane building: pair road borders and lane markings whose
//! distance and orientation look like a lane, verify the corridor is
//! continuous road, and assemble lanelets with left/right roles.

use crate::config::PipelineConfig;
use crate::geometry::{axial_difference, resample_uniform, Point2, Polyline};
use crate::georef::GeoReference;
use crate::raster::{Class, SemanticMask};

/// A boundary candidate pair with its matching score (fraction of samples
/// whose distance and orientation fit a lane).
#[derive(Debug, Clone, Copy)]
pub struct ScoredPair {
    pub a: usize,
    pub b: usize,
    pub score: f64,
    pub mean_distance: f64,
}

/// An atomic lane segment: indices into the boundary list plus any symbols
/// whose axis midpoint falls inside the corridor.
#[derive(Debug, Clone)]
pub struct Lanelet {
    pub left: usize,
    pub right: usize,
    pub symbols: Vec<usize>,
    pub mean_width: f64,
}

/// Nearest point on a chain plus the direction of the segment it lies on.
fn nearest_on_chain(pl: &Polyline, p: &Point2) -> (f64, Point2, f64) {
    let mut best = (f64::INFINITY, *p, 0.0);
    for i in 0..pl.segment_count() {
        let (a, b) = pl.segment(i);
        let abx = b.x - a.x;
        let aby = b.y - a.y;
        let len2 = abx * abx + aby * aby;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0)
        };
        let q = Point2::new(a.x + t * abx, a.y + t * aby);
        let d = p.distance(&q);
        if d < best.0 {
            best = (d, q, aby.atan2(abx));
        }
    }
    best
}

/// Sample points and local directions along a chain, one per
/// `lane_sample_step_m`.
fn samples_with_directions(pl: &Polyline, step: f64) -> Vec<(Point2, f64)> {
    let Ok(points) = resample_uniform(pl, step) else {
        return Vec::new();
    };
    points
        .windows(2)
        .map(|w| {
            let dir = (w[1].y - w[0].y).atan2(w[1].x - w[0].x);
            (
                Point2::new((w[0].x + w[1].x) / 2.0, (w[0].y + w[1].y) / 2.0),
                dir,
            )
        })
        .collect()
}

/// Scores every unordered boundary pair by sampling the shorter one against
/// the other. A pair qualifies when at least `lane_match_fraction` of samples
/// lie within the width gates at a compatible orientation.
pub fn candidate_pairs(boundaries: &[Polyline], config: &PipelineConfig) -> Vec<ScoredPair> {
    let angle_tol = config.lane_angle_tol_deg.to_radians();
    let mut out = Vec::new();
    for i in 0..boundaries.len() {
        for j in i + 1..boundaries.len() {
            let (src, dst, a_idx, b_idx) =
                if boundaries[i].arc_length() <= boundaries[j].arc_length() {
                    (&boundaries[i], &boundaries[j], i, j)
                } else {
                    (&boundaries[j], &boundaries[i], j, i)
                };
            let samples = samples_with_directions(src, config.lane_sample_step_m);
            if samples.is_empty() {
                continue;
            }
            let mut matches = 0usize;
            let mut dist_sum = 0.0;
            for (p, dir) in &samples {
                let (dist, _, other_dir) = nearest_on_chain(dst, p);
                if dist < config.lane_width_min_m || dist > config.lane_width_max_m {
                    continue;
                }
                if axial_difference(*dir, other_dir) > angle_tol {
                    continue;
                }
                matches += 1;
                dist_sum += dist;
            }
            let score = matches as f64 / samples.len() as f64;
            if score >= config.lane_match_fraction {
                out.push(ScoredPair {
                    a: a_idx,
                    b: b_idx,
                    score,
                    mean_distance: dist_sum / matches as f64,
                });
            }
        }
    }
    out
}

/// True when every sampled cross-segment between the pair's boundaries
/// traverses drivable classes only (road, lane marking, symbol).
pub fn continuity_check(
    mask: &SemanticMask,
    georef: &GeoReference,
    boundaries: &[Polyline],
    pair: &ScoredPair,
    config: &PipelineConfig,
) -> bool {
    let (src, dst) = if boundaries[pair.a].arc_length() <= boundaries[pair.b].arc_length() {
        (&boundaries[pair.a], &boundaries[pair.b])
    } else {
        (&boundaries[pair.b], &boundaries[pair.a])
    };
    let samples = samples_with_directions(src, config.lane_sample_step_m);
    for (p, _) in &samples {
        let (dist, q, _) = nearest_on_chain(dst, p);
        if dist < config.lane_width_min_m || dist > config.lane_width_max_m {
            continue; // outside the corridor, not a cross-section
        }
        if !cross_segment_is_drivable(mask, georef, p, &q) {
            return false;
        }
    }
    true
}

/// Walks the pixels under the segment, inset one GSD from both ends so the
/// boundary pixels themselves (which sit on the transition) do not count.
fn cross_segment_is_drivable(
    mask: &SemanticMask,
    georef: &GeoReference,
    a: &Point2,
    b: &Point2,
) -> bool {
    let len = a.distance(b);
    if len <= 2.0 * georef.gsd {
        return true;
    }
    let inset = georef.gsd / len;
    let (t0, t1) = (inset, 1.0 - inset);
    let steps = (len / (0.5 * georef.gsd)).ceil() as usize;
    for k in 0..=steps {
        let t = t0 + (t1 - t0) * k as f64 / steps as f64;
        let p = a.lerp(b, t);
        let px = georef.utm_point_to_pixel(p);
        match mask.class_at_checked(px.x.round() as i64, px.y.round() as i64) {
            Some(Class::Road) | Some(Class::LaneMarking) | Some(Class::Symbol) => {}
            _ => return false,
        }
    }
    true
}

/// True when chain `c` cuts the middle part of at least half of the pair's
/// cross-sections: the mark of a competing pair that spans two lanes.
fn has_intermediate_boundary(
    boundaries: &[Polyline],
    pair: &ScoredPair,
    c: usize,
    config: &PipelineConfig,
) -> bool {
    let (src, dst) = if boundaries[pair.a].arc_length() <= boundaries[pair.b].arc_length() {
        (&boundaries[pair.a], &boundaries[pair.b])
    } else {
        (&boundaries[pair.b], &boundaries[pair.a])
    };
    let samples = samples_with_directions(src, config.lane_sample_step_m);
    let mut sections = 0usize;
    let mut cut = 0usize;
    for (p, _) in &samples {
        let (dist, q, _) = nearest_on_chain(dst, p);
        if dist < config.lane_width_min_m || dist > config.lane_width_max_m {
            continue;
        }
        sections += 1;
        // Only the interior of the section counts; touching an endpoint is
        // not "between".
        let inner_a = p.lerp(&q, 0.15);
        let inner_b = p.lerp(&q, 0.85);
        if chain_intersects_segment(&boundaries[c], &inner_a, &inner_b) {
            cut += 1;
        }
    }
    sections > 0 && (cut as f64 / sections as f64) >= 0.5
}

fn orient(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(p1: &Point2, p2: &Point2, q1: &Point2, q2: &Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    false
}

fn chain_intersects_segment(pl: &Polyline, a: &Point2, b: &Point2) -> bool {
    (0..pl.segment_count()).any(|i| {
        let (s, e) = pl.segment(i);
        segments_intersect(&s, &e, a, b)
    })
}

fn chains_cross(a: &Polyline, b: &Polyline) -> bool {
    (0..a.segment_count()).any(|i| {
        let (s, e) = a.segment(i);
        chain_intersects_segment(b, &s, &e)
    })
}

/// Fraction of `a`'s samples lying on the left of `b` (walking `b` in its
/// stored direction; left is counter-clockwise in the y-up metric frame).
fn left_fraction(a: &Polyline, b: &Polyline, step: f64) -> f64 {
    let samples = samples_with_directions(a, step);
    if samples.is_empty() {
        return 0.5;
    }
    let mut left = 0usize;
    for (p, _) in &samples {
        let (_, q, dir) = nearest_on_chain(b, p);
        let cross = dir.cos() * (p.y - q.y) - dir.sin() * (p.x - q.x);
        if cross > 0.0 {
            left += 1;
        }
    }
    left as f64 / samples.len() as f64
}

/// Greedy lanelet assembly from scored, continuity-checked pairs. Boundaries
/// may serve several lanelets (a center marking bounds two lanes); competing
/// pairs that span an intermediate boundary are suppressed; each symbol
/// attaches to at most one lanelet.
pub fn build_lanelets(
    boundaries: &[Polyline],
    pairs: &[ScoredPair],
    symbol_midpoints: &[Point2],
    config: &PipelineConfig,
) -> Vec<Lanelet> {
    let mut order: Vec<&ScoredPair> = pairs.iter().collect();
    order.sort_by(|x, y| {
        y.score
            .partial_cmp(&x.score)
            .unwrap()
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });

    let mut lanelets: Vec<Lanelet> = Vec::new();
    let mut emitted: Vec<(usize, usize)> = Vec::new();
    for pair in order {
        let key = (pair.a.min(pair.b), pair.a.max(pair.b));
        if emitted.contains(&key) {
            continue;
        }
        if chains_cross(&boundaries[pair.a], &boundaries[pair.b]) {
            continue;
        }
        let competing = (0..boundaries.len())
            .filter(|&c| c != pair.a && c != pair.b)
            .any(|c| has_intermediate_boundary(boundaries, pair, c, config));
        if competing {
            continue;
        }
        // Role assignment: left is on the left when walking the right
        // boundary in its stored direction.
        let ab = left_fraction(
            &boundaries[pair.a],
            &boundaries[pair.b],
            config.lane_sample_step_m,
        );
        let ba = left_fraction(
            &boundaries[pair.b],
            &boundaries[pair.a],
            config.lane_sample_step_m,
        );
        let (left, right) = if ab >= 0.5 && ab >= ba {
            (pair.a, pair.b)
        } else if ba >= 0.5 {
            (pair.b, pair.a)
        } else {
            (pair.a.min(pair.b), pair.a.max(pair.b))
        };
        emitted.push(key);
        lanelets.push(Lanelet {
            left,
            right,
            symbols: Vec::new(),
            mean_width: pair.mean_distance,
        });
    }

    // Attach each symbol to the lanelet whose cross-section contains it.
    for (sym_idx, m) in symbol_midpoints.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (ll_idx, ll) in lanelets.iter().enumerate() {
            let (dl, pl, _) = nearest_on_chain(&boundaries[ll.left], m);
            let (dr, pr, _) = nearest_on_chain(&boundaries[ll.right], m);
            let span = pl.distance(&pr);
            if span <= 0.0 {
                continue;
            }
            let defect = (dl + dr - span).abs() / span;
            if defect < 0.15 && best.map(|(_, bd)| defect < bd).unwrap_or(true) {
                best = Some((ll_idx, defect));
            }
        }
        if let Some((ll_idx, _)) = best {
            lanelets[ll_idx].symbols.push(sym_idx);
        }
    }
    lanelets
}
