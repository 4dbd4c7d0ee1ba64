//! Map evaluation: resample generated and reference polylines uniformly,
//! assign points one-to-one within a distance gate, and report precision and
//! recall.

mod assignment;

pub use assignment::{optimal_assignment, Assignment};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::PipelineConfig;
use crate::geometry::{resample_uniform, Point2, Polyline, Unit};
use crate::lanelet2::HdMap;

/// Headline metrics of one evaluation run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MatchReport {
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub generated_points: usize,
    pub reference_points: usize,
    pub mean_match_distance: f64,
}

/// A resampled evaluation point carrying the class of its source polyline
/// (classes do not gate the matching; they feed the supplementary counts).
#[derive(Debug, Clone)]
pub struct EvalPoint {
    pub pos: Point2,
    pub class: String,
}

/// Resamples every polyline at `step` and pools the points.
pub fn prepare_points(polylines: &[(Polyline, String)], step: f64) -> Vec<EvalPoint> {
    let mut out = Vec::new();
    for (pl, class) in polylines {
        if let Ok(points) = resample_uniform(pl, step) {
            out.extend(points.into_iter().map(|pos| EvalPoint {
                pos,
                class: class.clone(),
            }));
        }
    }
    out
}

/// Precision/recall from a match count. An empty side counts as perfect when
/// nothing was matched against it.
pub fn precision_recall(matched: usize, n_gen: usize, n_ref: usize) -> (f64, f64) {
    let precision = if n_gen == 0 {
        1.0
    } else {
        matched as f64 / n_gen as f64
    };
    let recall = if n_ref == 0 {
        1.0
    } else {
        matched as f64 / n_ref as f64
    };
    (precision, recall)
}

pub fn match_report(assignment: &Assignment, n_gen: usize, n_ref: usize) -> MatchReport {
    let matched = assignment.len();
    let (precision, recall) = precision_recall(matched, n_gen, n_ref);
    let mean = if matched == 0 {
        0.0
    } else {
        assignment.total_distance() / matched as f64
    };
    MatchReport {
        precision,
        recall,
        matched,
        generated_points: n_gen,
        reference_points: n_ref,
        mean_match_distance: mean,
    }
}

/// Supplementary per-class tallies. Matching itself is class-agnostic; a
/// matched pair counts toward the generated point's class on the precision
/// side and the reference point's class on the recall side.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct ClassCounts {
    pub generated_points: usize,
    pub reference_points: usize,
    pub matched_generated: usize,
    pub matched_reference: usize,
}

/// Full evaluation output; serialized as the report JSON.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EvalReport {
    #[serde(flatten)]
    pub headline: MatchReport,
    /// Root-mean-square distance of matched pairs (supplementary).
    pub rmse_match_distance: f64,
    pub per_class: BTreeMap<String, ClassCounts>,
}

/// Polylines of a map's ways in UTM metres, tagged `type` or
/// `type:subtype`. Arrow ways describe symbols, not contours, and are
/// excluded from the point protocol.
pub fn map_polylines(map: &HdMap) -> Vec<(Polyline, String)> {
    let mut out = Vec::new();
    for way in &map.ways {
        let way_type = way.tag("type").unwrap_or("untyped");
        if way_type == "arrow" {
            continue;
        }
        let class = match way.tag("subtype") {
            Some(sub) => format!("{way_type}:{sub}"),
            None => way_type.to_string(),
        };
        let mut pts: Vec<Point2> = way
            .node_refs
            .iter()
            .filter_map(|&r| map.node(r))
            .map(|n| Point2::new(n.local_x, n.local_y))
            .collect();
        let closed = pts.len() > 2 && way.node_refs.first() == way.node_refs.last();
        if closed {
            pts.pop();
        }
        if let Some(pl) = Polyline::dedup(pts, closed, Unit::Metre) {
            out.push((pl, class));
        }
    }
    out
}

/// Scores a generated map against a reference map with the resample-and-
/// assign protocol.
pub fn evaluate_maps(generated: &HdMap, reference: &HdMap, config: &PipelineConfig) -> EvalReport {
    let gen_points = prepare_points(&map_polylines(generated), config.resample_step_m);
    let ref_points = prepare_points(&map_polylines(reference), config.resample_step_m);
    evaluate_points(&gen_points, &ref_points, config.match_gate_m)
}

pub fn evaluate_points(gen: &[EvalPoint], reference: &[EvalPoint], gate: f64) -> EvalReport {
    let gen_pos: Vec<Point2> = gen.iter().map(|p| p.pos).collect();
    let ref_pos: Vec<Point2> = reference.iter().map(|p| p.pos).collect();
    let assignment = optimal_assignment(&gen_pos, &ref_pos, gate);
    let headline = match_report(&assignment, gen.len(), reference.len());

    let mut per_class: BTreeMap<String, ClassCounts> = BTreeMap::new();
    for p in gen {
        per_class
            .entry(p.class.clone())
            .or_default()
            .generated_points += 1;
    }
    for p in reference {
        per_class
            .entry(p.class.clone())
            .or_default()
            .reference_points += 1;
    }
    let mut sq_sum = 0.0;
    for &(g, r, d) in &assignment.pairs {
        per_class.get_mut(&gen[g].class).unwrap().matched_generated += 1;
        per_class
            .get_mut(&reference[r].class)
            .unwrap()
            .matched_reference += 1;
        sq_sum += d * d;
    }
    let rmse = if assignment.is_empty() {
        0.0
    } else {
        (sq_sum / assignment.len() as f64).sqrt()
    };
    EvalReport {
        headline,
        rmse_match_distance: rmse,
        per_class,
    }
}
