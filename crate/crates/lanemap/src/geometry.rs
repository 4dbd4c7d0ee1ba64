//! 2-D polyline algebra: simplification, uniform resampling, orientation
//! analysis and orientation-based splitting.
//!
//! Every [`Polyline`] carries a coordinate [`Unit`] so pixel-space chains
//! (contours, skeleton paths) cannot be mixed up with metric ones. All
//! functions here are pure and translation-invariant.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline contains non-finite coordinates")]
    NonFinite,
    #[error("consecutive duplicate point at index {0}")]
    DuplicatePoint(usize),
    #[error("closed polyline stores its first point again as its last")]
    ExplicitClosure,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Coordinate unit of a polyline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Pixel,
    Metre,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

/// Ordered 2-D point chain. `closed` means the last point connects back to
/// the first; the closing point is implicit, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    closed: bool,
    unit: Unit,
}

impl Polyline {
    pub fn new(points: Vec<Point2>, closed: bool, unit: Unit) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            if i > 0 && *p == points[i - 1] {
                return Err(GeometryError::DuplicatePoint(i));
            }
        }
        if closed && points.first() == points.last() {
            return Err(GeometryError::ExplicitClosure);
        }
        Ok(Self {
            points,
            closed,
            unit,
        })
    }

    /// Builds a polyline from raw points, dropping consecutive duplicates and
    /// an explicit closing point. Returns `None` when fewer than 2 distinct
    /// points remain.
    pub fn dedup(points: Vec<Point2>, closed: bool, unit: Unit) -> Option<Self> {
        let mut cleaned: Vec<Point2> = Vec::with_capacity(points.len());
        for p in points {
            if cleaned.last() != Some(&p) {
                cleaned.push(p);
            }
        }
        if closed && cleaned.len() > 1 && cleaned.first() == cleaned.last() {
            cleaned.pop();
        }
        if cleaned.len() < 2 {
            return None;
        }
        Self::new(cleaned, closed, unit).ok()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Number of segments, including the implicit closing segment.
    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    /// Segment i as an ordered point pair (wraps around when closed).
    pub fn segment(&self, i: usize) -> (Point2, Point2) {
        let a = self.points[i];
        let b = self.points[(i + 1) % self.points.len()];
        (a, b)
    }

    /// Total arc length, including the closing segment when closed.
    pub fn arc_length(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                a.distance(&b)
            })
            .sum()
    }

    /// Minimum distance from `p` to any segment of the chain.
    pub fn distance_to(&self, p: &Point2) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                point_segment_distance(p, &a, &b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn reversed(&self) -> Polyline {
        let mut points = self.points.clone();
        points.reverse();
        Polyline {
            points,
            closed: self.closed,
            unit: self.unit,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polyline {
        Polyline {
            points: self
                .points
                .iter()
                .map(|p| Point2::new(p.x + dx, p.y + dy))
                .collect(),
            closed: self.closed,
            unit: self.unit,
        }
    }

    /// Signed shoelace area (closed polylines). Positive for counter-clockwise
    /// order in a y-up frame.
    pub fn signed_area(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.points.len() {
            let a = self.points[i];
            let b = self.points[(i + 1) % self.points.len()];
            acc += a.x * b.y - b.x * a.y;
        }
        acc / 2.0
    }
}

/// Centroid, unit principal axis and eigenvalue gap of a point cloud.
/// `None` for an empty input; ties fall back to the +x axis.
pub fn principal_axis(pts: &[Point2]) -> Option<(Point2, Point2, f64)> {
    if pts.is_empty() {
        return None;
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - cx, p.y - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    sxx /= n;
    sxy /= n;
    syy /= n;
    let trace = sxx + syy;
    let det = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).sqrt();
    let l1 = (trace + det) / 2.0;
    let l2 = (trace - det) / 2.0;
    let axis = if sxy.abs() > 1e-12 {
        let v = Point2::new(l1 - syy, sxy);
        let len = v.x.hypot(v.y);
        Point2::new(v.x / len, v.y / len)
    } else if sxx >= syy {
        Point2::new(1.0, 0.0)
    } else {
        Point2::new(0.0, 1.0)
    };
    Some((Point2::new(cx, cy), axis, l1 - l2))
}

/// Distance from point `p` to segment `ab`.
pub fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / len2;
    let t = t.clamp(0.0, 1.0);
    p.distance(&Point2::new(a.x + t * abx, a.y + t * aby))
}

/// Douglas-Peucker simplification. Output vertices are a subset of the input;
/// every dropped vertex lies within `tolerance` of the output chain, and the
/// endpoints of open polylines survive.
pub fn simplify(pl: &Polyline, tolerance: f64) -> Result<Polyline, GeometryError> {
    if !(tolerance > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let pts = pl.points();
    if pl.is_closed() {
        // Anchor a closed chain at point 0 and the point farthest from it,
        // then simplify the two arcs independently.
        let far = pts
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| pts[0].distance(a).partial_cmp(&pts[0].distance(b)).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if far == 0 {
            return Ok(pl.clone());
        }
        let mut keep = vec![false; pts.len()];
        keep[0] = true;
        keep[far] = true;
        dp_mark(pts, 0, far, tolerance, &mut keep);
        // Second arc wraps: far .. n-1, then back to 0.
        let wrapped: Vec<Point2> = pts[far..]
            .iter()
            .chain(pts.iter().take(1))
            .copied()
            .collect();
        let mut keep_wrapped = vec![false; wrapped.len()];
        keep_wrapped[0] = true;
        *keep_wrapped.last_mut().unwrap() = true;
        dp_mark(&wrapped, 0, wrapped.len() - 1, tolerance, &mut keep_wrapped);
        for (j, flag) in keep_wrapped.iter().enumerate().take(wrapped.len() - 1) {
            if *flag {
                keep[far + j] = true;
            }
        }
        let kept: Vec<Point2> = pts
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(p, _)| *p)
            .collect();
        return Polyline::new(kept, true, pl.unit());
    }

    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    dp_mark(pts, 0, pts.len() - 1, tolerance, &mut keep);
    let kept: Vec<Point2> = pts
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(p, _)| *p)
        .collect();
    Polyline::new(kept, false, pl.unit())
}

fn dp_mark(pts: &[Point2], start: usize, end: usize, tolerance: f64, keep: &mut [bool]) {
    if end <= start + 1 {
        return;
    }
    let mut max_dist = 0.0;
    let mut max_idx = start;
    for i in start + 1..end {
        let d = point_segment_distance(&pts[i], &pts[start], &pts[end]);
        if d > max_dist {
            max_dist = d;
            max_idx = i;
        }
    }
    if max_dist > tolerance {
        keep[max_idx] = true;
        dp_mark(pts, start, max_idx, tolerance, keep);
        dp_mark(pts, max_idx, end, tolerance, keep);
    }
}

/// Points of `pl` at arc-length positions 0, step, 2*step, ... plus the chain
/// end. Also returns each output point's arc-length position along the input.
pub fn resample_with_positions(
    pl: &Polyline,
    step: f64,
) -> Result<(Vec<Point2>, Vec<f64>), GeometryError> {
    if !(step > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    let total = pl.arc_length();
    if total <= 0.0 {
        return Err(GeometryError::InvalidArgument(
            "cannot resample a zero-length polyline".into(),
        ));
    }

    let mut points = Vec::new();
    let mut positions = Vec::new();
    // Sample positions are k * step (not accumulated) so spacing is exact.
    let mut k: u64 = 0;
    let mut walked = 0.0;
    for i in 0..pl.segment_count() {
        let (a, b) = pl.segment(i);
        let seg_len = a.distance(&b);
        while k as f64 * step <= walked + seg_len {
            let pos = k as f64 * step;
            let t = ((pos - walked) / seg_len).clamp(0.0, 1.0);
            points.push(a.lerp(&b, t));
            positions.push(pos);
            k += 1;
        }
        walked += seg_len;
    }
    // Close out at the chain end. A last sample within fp noise of the end is
    // snapped onto it rather than left as a degenerate sliver. For closed
    // polylines the end is the first point again and the final spacing is the
    // wrap-around remainder in (0, step].
    let end = if pl.is_closed() {
        pl.points()[0]
    } else {
        *pl.points().last().unwrap()
    };
    let last = *positions.last().unwrap();
    if total - last > 1e-9 * step {
        points.push(end);
        positions.push(total);
    } else {
        *points.last_mut().unwrap() = end;
        *positions.last_mut().unwrap() = total;
    }
    Ok((points, positions))
}

/// Uniform resampling: consecutive along-chain spacing is exactly `step`
/// except the final remainder in (0, step]. The first point is preserved.
pub fn resample_uniform(pl: &Polyline, step: f64) -> Result<Vec<Point2>, GeometryError> {
    resample_with_positions(pl, step).map(|(points, _)| points)
}

/// One angle per segment, measured from the +x axis, in [0, 2*pi).
pub fn segment_orientations(pl: &Polyline) -> Vec<f64> {
    (0..pl.segment_count())
        .map(|i| {
            let (a, b) = pl.segment(i);
            let ang = (b.y - a.y).atan2(b.x - a.x);
            if ang < 0.0 {
                ang + TAU
            } else {
                ang
            }
        })
        .collect()
}

/// Absolute turn between two segment orientations, in [0, pi].
pub fn turn_angle(a: f64, b: f64) -> f64 {
    let mut diff = (b - a).rem_euclid(TAU);
    if diff > PI {
        diff = TAU - diff;
    }
    diff
}

/// Difference between two axial orientations (theta == theta + pi), in [0, pi/2].
pub fn axial_difference(a: f64, b: f64) -> f64 {
    let mut diff = (b - a).rem_euclid(PI);
    if diff > PI / 2.0 {
        diff = PI - diff;
    }
    diff
}

/// Splits a polyline wherever the turn between consecutive segments reaches
/// `max_turn` degrees. Cut vertices are shared by the adjacent outputs; a
/// closed input with no cuts is returned unchanged, otherwise the outputs are
/// open chains that together walk the full ring.
pub fn split_on_orientation(
    pl: &Polyline,
    max_turn_deg: f64,
) -> Result<Vec<Polyline>, GeometryError> {
    if !(max_turn_deg > 0.0 && max_turn_deg < 180.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "max_turn must be in (0, 180) degrees, got {max_turn_deg}"
        )));
    }
    let threshold = max_turn_deg.to_radians();
    let orients = segment_orientations(pl);
    let nseg = orients.len();

    if pl.is_closed() {
        // Turn at vertex i sits between segment i-1 (wrapping) and segment i.
        let cuts: Vec<usize> = (0..nseg)
            .filter(|&i| turn_angle(orients[(i + nseg - 1) % nseg], orients[i]) >= threshold)
            .collect();
        if cuts.is_empty() {
            return Ok(vec![pl.clone()]);
        }
        let pts = pl.points();
        let mut out = Vec::with_capacity(cuts.len());
        for (k, &start) in cuts.iter().enumerate() {
            let end = cuts[(k + 1) % cuts.len()];
            let mut chain = vec![pts[start]];
            let mut i = start;
            loop {
                i = (i + 1) % pts.len();
                chain.push(pts[i]);
                if i == end {
                    break;
                }
            }
            out.push(Polyline::new(chain, false, pl.unit())?);
        }
        return Ok(out);
    }

    let pts = pl.points();
    let mut out = Vec::new();
    let mut start = 0;
    for v in 1..pts.len() - 1 {
        if turn_angle(orients[v - 1], orients[v]) >= threshold {
            out.push(Polyline::new(pts[start..=v].to_vec(), false, pl.unit())?);
            start = v;
        }
    }
    out.push(Polyline::new(pts[start..].to_vec(), false, pl.unit())?);
    Ok(out)
}

/// [`split_on_orientation`] over a smoothed turn estimate: the turn at a
/// vertex compares the chord directions over up to `window` segments on each
/// side, which survives pixel staircase noise on traced chains.
pub fn split_on_smoothed_orientation(
    pl: &Polyline,
    max_turn_deg: f64,
    window: usize,
) -> Result<Vec<Polyline>, GeometryError> {
    if !(max_turn_deg > 0.0 && max_turn_deg < 180.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "max_turn must be in (0, 180) degrees, got {max_turn_deg}"
        )));
    }
    let threshold = max_turn_deg.to_radians();
    let pts = pl.points();
    let n = pts.len();
    let w = window.max(1);

    let chord_dir = |from: usize, to: usize| -> Option<f64> {
        let (a, b) = (pts[from], pts[to]);
        if a == b {
            None
        } else {
            Some((b.y - a.y).atan2(b.x - a.x))
        }
    };

    // Open chains only; closed centerline loops have no stop-line corners to
    // find and pass through unchanged.
    if pl.is_closed() {
        return Ok(vec![pl.clone()]);
    }

    let mut out = Vec::new();
    let mut start = 0;
    for v in 1..n - 1 {
        let before = chord_dir(v.saturating_sub(w), v);
        let after = chord_dir(v, (v + w).min(n - 1));
        if let (Some(a), Some(b)) = (before, after) {
            if turn_angle(a, b) >= threshold {
                out.push(Polyline::new(pts[start..=v].to_vec(), false, pl.unit())?);
                start = v;
            }
        }
    }
    out.push(Polyline::new(pts[start..].to_vec(), false, pl.unit())?);
    Ok(out)
}
