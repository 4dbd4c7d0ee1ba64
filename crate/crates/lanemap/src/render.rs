//! Inspection overlays: the class-colored mask with map polylines drawn on
//! top, color-coded by element kind.

use crate::georef::GeoReference;
use crate::lanelet2::HdMap;
use crate::raster::{Class, SemanticMask};

/// Mask base colors, one per class id.
pub fn class_color(class: Class) -> [u8; 3] {
    match class {
        Class::Irrelevant => [0, 0, 0],
        Class::Road => [120, 120, 120],
        Class::Walkway => [70, 100, 220],
        Class::Vegetation => [60, 160, 70],
        Class::Parking => [170, 140, 60],
        Class::TrafficIsland => [150, 80, 180],
        Class::Symbol => [220, 60, 60],
        Class::LaneMarking => [80, 220, 220],
        Class::Vehicle => [230, 200, 40],
    }
}

/// Overlay colors by way type (and subtype for markings).
pub fn way_color(way_type: &str, subtype: Option<&str>) -> [u8; 3] {
    match (way_type, subtype) {
        ("road_border", _) => [255, 140, 0],
        ("curbstone", _) => [255, 0, 200],
        ("line_thin", Some("dashed")) => [255, 255, 0],
        ("line_thin", _) => [255, 255, 255],
        ("arrow", _) => [0, 255, 0],
        _ => [255, 0, 0],
    }
}

/// Renders the mask with the map's ways drawn over it. Ways outside the tile
/// are clipped; returns the interleaved RGB buffer and whether anything had
/// to be clipped away entirely.
pub fn render_overlay(mask: &SemanticMask, map: &HdMap, georef: &GeoReference) -> (Vec<u8>, bool) {
    let (w, h) = (mask.width(), mask.height());
    let mut rgb = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let color = class_color(mask.class_at(x, y));
            let idx = (y * w + x) * 3;
            rgb[idx..idx + 3].copy_from_slice(&color);
        }
    }

    let mut clipped = false;
    for way in &map.ways {
        let color = way_color(way.tag("type").unwrap_or(""), way.tag("subtype"));
        let pts: Vec<(f64, f64)> = way
            .node_refs
            .iter()
            .filter_map(|&r| map.node(r))
            .map(|n| georef.utm_to_pixel(n.local_x, n.local_y))
            .collect();
        let mut any_inside = false;
        for seg in pts.windows(2) {
            any_inside |= draw_segment(&mut rgb, w, h, seg[0], seg[1], color);
        }
        if !pts.is_empty() && !any_inside {
            clipped = true;
        }
    }
    (rgb, clipped)
}

/// Draws a line segment with simple DDA stepping; out-of-raster samples are
/// skipped. Returns whether any pixel landed inside.
fn draw_segment(
    rgb: &mut [u8],
    w: usize,
    h: usize,
    a: (f64, f64),
    b: (f64, f64),
    color: [u8; 3],
) -> bool {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    let mut inside = false;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = a.0 + (b.0 - a.0) * t;
        let y = a.1 + (b.1 - a.1) * t;
        let (px, py) = (x.round(), y.round());
        if px < 0.0 || py < 0.0 || px as usize >= w || py as usize >= h {
            continue;
        }
        inside = true;
        let idx = (py as usize * w + px as usize) * 3;
        rgb[idx..idx + 3].copy_from_slice(&color);
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use crate::pipeline::run_pipeline;
    use crate::symbols::TemplateClassifier;
    use crate::synth::{render_scene, SceneSpec};

    #[test]
    fn overlay_paints_polylines_over_the_mask() {
        let scene = render_scene(&SceneSpec::default()).unwrap();
        let config = PipelineConfig::default();
        let classifier = TemplateClassifier::from_config(&config);
        let out = run_pipeline(&scene.mask, &scene.georef, &config, &classifier).unwrap();
        let (rgb, clipped) = render_overlay(&scene.mask, &out.map, &scene.georef);
        assert!(!clipped);
        assert_eq!(rgb.len(), scene.mask.width() * scene.mask.height() * 3);
        // Some pixels carry the border color, and they sit where the mask
        // transitions from road.
        let border = way_color("road_border", None);
        let count = rgb.chunks_exact(3).filter(|c| *c == border).count();
        assert!(count > 100, "border pixels drawn: {count}");
    }

    #[test]
    fn empty_map_renders_the_plain_mask() {
        let scene = render_scene(&SceneSpec::default()).unwrap();
        let (rgb, clipped) = render_overlay(
            &scene.mask,
            &crate::lanelet2::HdMap::default(),
            &scene.georef,
        );
        assert!(!clipped);
        let road = class_color(Class::Road);
        assert!(rgb.chunks_exact(3).any(|c| c == road));
    }

    #[test]
    fn map_outside_the_tile_reports_clipping() {
        let scene = render_scene(&SceneSpec::default()).unwrap();
        let mut builder = crate::lanelet2::MapBuilder::new();
        let a = builder.add_node(50.0, 6.0, 0.0, 0.0); // far outside the tile
        let b = builder.add_node(50.0, 6.0, 1.0, 0.0);
        builder.add_way(vec![a, b], vec![("type".into(), "road_border".into())]);
        let map = builder.finish().unwrap();
        let (_, clipped) = render_overlay(&scene.mask, &map, &scene.georef);
        assert!(clipped);
    }
}
