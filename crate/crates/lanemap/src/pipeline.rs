//! End-to-end map construction from a semantic mask: label repair, border
//! extraction, marking extraction, symbol classification, lane pairing and
//! the final Lanelet2 map assembly.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::border::{extract_road_borders, RoadBorder};
use crate::config::PipelineConfig;
use crate::geodesy::{utm_to_wgs84, GeodesyError};
use crate::georef::GeoReference;
use crate::lanelet2::{HdMap, MapBuilder, MapError, RelationMember};
use crate::lanes::{self, Lanelet};
use crate::marking::{extract_lane_markings, LaneMarking};
use crate::raster::{RasterError, SemanticMask};
use crate::symbols::{extract_symbols, reassign_mixed_components, Symbol, SymbolClassifier};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("node outside utm zone: {0}")]
    Geodesy(#[from] GeodesyError),
}

/// Element counts and stage timings of one run, serialized as the run
/// summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub road_borders: usize,
    pub curbstones: usize,
    pub solid_markings: usize,
    pub dashed_markings: usize,
    pub symbols: usize,
    pub lanelets: usize,
    pub nodes: usize,
    pub ways: usize,
    pub relations: usize,
    pub timings_ms: TimingsMs,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingsMs {
    pub reassign: f64,
    pub borders: f64,
    pub markings: f64,
    pub symbols: f64,
    pub lanes: f64,
    pub export: f64,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub map: HdMap,
    pub borders: Vec<RoadBorder>,
    pub markings: Vec<LaneMarking>,
    pub symbols: Vec<Symbol>,
    /// Lanelets index into the boundary list: borders first, then markings.
    pub lanelets: Vec<Lanelet>,
    pub stats: RunStats,
}

/// Runs the full pipeline over one tile.
pub fn run_pipeline(
    mask: &SemanticMask,
    georef: &GeoReference,
    config: &PipelineConfig,
    classifier: &dyn SymbolClassifier,
) -> Result<PipelineOutput, PipelineError> {
    let t = Instant::now();
    let denoised = if config.denoise_passes > 0 {
        crate::raster::majority_filter(mask, config.denoise_passes)
    } else {
        mask.clone()
    };
    let repaired = reassign_mixed_components(&denoised);
    let reassign_ms = ms_since(t);

    let t = Instant::now();
    let borders = extract_road_borders(&repaired, georef, config);
    let borders_ms = ms_since(t);

    let t = Instant::now();
    let markings = extract_lane_markings(&repaired, georef, config)?;
    let markings_ms = ms_since(t);

    let t = Instant::now();
    let symbols = extract_symbols(&repaired, georef, config, classifier);
    let symbols_ms = ms_since(t);

    let t = Instant::now();
    let boundaries: Vec<crate::geometry::Polyline> = borders
        .iter()
        .map(|b| b.line.clone())
        .chain(markings.iter().map(|m| m.line.clone()))
        .collect();
    let pairs: Vec<lanes::ScoredPair> = lanes::candidate_pairs(&boundaries, config)
        .into_iter()
        .filter(|pair| lanes::continuity_check(&repaired, georef, &boundaries, pair, config))
        .collect();
    let midpoints: Vec<crate::geometry::Point2> = symbols
        .iter()
        .map(|s| {
            crate::geometry::Point2::new(
                (s.axis.0.x + s.axis.1.x) / 2.0,
                (s.axis.0.y + s.axis.1.y) / 2.0,
            )
        })
        .collect();
    let lanelets = lanes::build_lanelets(&boundaries, &pairs, &midpoints, config);
    let lanes_ms = ms_since(t);

    let t = Instant::now();
    let (map, stats_counts) = assemble_map(georef, &borders, &markings, &symbols, &lanelets)?;
    let export_ms = ms_since(t);

    let stats = RunStats {
        road_borders: borders
            .iter()
            .filter(|b| matches!(b.kind, crate::border::BorderKind::RoadBorder))
            .count(),
        curbstones: borders
            .iter()
            .filter(|b| matches!(b.kind, crate::border::BorderKind::Curbstone))
            .count(),
        solid_markings: markings
            .iter()
            .filter(|m| matches!(m.kind, crate::marking::MarkingKind::Solid))
            .count(),
        dashed_markings: markings
            .iter()
            .filter(|m| matches!(m.kind, crate::marking::MarkingKind::Dashed))
            .count(),
        symbols: symbols.len(),
        lanelets: lanelets.len(),
        nodes: stats_counts.0,
        ways: stats_counts.1,
        relations: stats_counts.2,
        timings_ms: TimingsMs {
            reassign: reassign_ms,
            borders: borders_ms,
            markings: markings_ms,
            symbols: symbols_ms,
            lanes: lanes_ms,
            export: export_ms,
        },
    };
    Ok(PipelineOutput {
        map,
        borders,
        markings,
        symbols,
        lanelets,
        stats,
    })
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

fn assemble_map(
    georef: &GeoReference,
    borders: &[RoadBorder],
    markings: &[LaneMarking],
    symbols: &[Symbol],
    lanelets: &[Lanelet],
) -> Result<(HdMap, (usize, usize, usize)), PipelineError> {
    let mut builder = MapBuilder::new();
    let mut boundary_way_ids = Vec::new();

    let add_line = |builder: &mut MapBuilder,
                    line: &crate::geometry::Polyline,
                    tags: Vec<(String, String)>|
     -> Result<i64, PipelineError> {
        let mut refs = Vec::with_capacity(line.len() + 1);
        for p in line.points() {
            let (lat, lon) = utm_to_wgs84(p.x, p.y, georef.zone, georef.hemisphere)?;
            refs.push(builder.add_node(lat, lon, p.x, p.y));
        }
        if line.is_closed() {
            let first = refs[0];
            refs.push(first);
        }
        Ok(builder.add_way(refs, tags))
    };

    for border in borders {
        let id = add_line(
            &mut builder,
            &border.line,
            vec![("type".to_string(), border.kind.tag().to_string())],
        )?;
        boundary_way_ids.push(id);
    }
    for marking in markings {
        let id = add_line(
            &mut builder,
            &marking.line,
            vec![
                ("type".to_string(), "line_thin".to_string()),
                ("subtype".to_string(), marking.kind.tag().to_string()),
            ],
        )?;
        boundary_way_ids.push(id);
    }
    for symbol in symbols {
        let mut refs = Vec::with_capacity(2);
        for p in [symbol.axis.0, symbol.axis.1] {
            let (lat, lon) = utm_to_wgs84(p.x, p.y, georef.zone, georef.hemisphere)?;
            refs.push(builder.add_node(lat, lon, p.x, p.y));
        }
        builder.add_way(
            refs,
            vec![
                ("type".to_string(), "arrow".to_string()),
                ("subtype".to_string(), symbol.class.tag().to_string()),
                (
                    "confidence".to_string(),
                    format!("{:.3}", symbol.confidence),
                ),
            ],
        );
    }
    for lanelet in lanelets {
        builder.add_relation(
            vec![
                RelationMember {
                    member_type: "way".into(),
                    role: "left".into(),
                    ref_id: boundary_way_ids[lanelet.left],
                },
                RelationMember {
                    member_type: "way".into(),
                    role: "right".into(),
                    ref_id: boundary_way_ids[lanelet.right],
                },
            ],
            vec![
                ("type".to_string(), "lanelet".to_string()),
                ("needs_review_direction".to_string(), "yes".to_string()),
            ],
        );
    }
    let map = builder.finish()?;
    let counts = (map.nodes.len(), map.ways.len(), map.relations.len());
    Ok((map, counts))
}
