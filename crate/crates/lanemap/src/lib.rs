//! lanemap turns semantically segmented aerial-imagery tiles into
//! prototypical HD maps in the Lanelet2/OSM XML dialect and scores generated
//! maps against reference polylines.
//!
//! The processing stages mirror the map content: the drivable area's boundary
//! becomes classified road borders, lane-marking pixels become solid or
//! dashed centerlines, road arrows are repaired, located and classified, and
//! boundary pairs are combined into lanelets. A synthetic scene generator and
//! the resample-and-assign evaluation harness close the loop for end-to-end
//! testing.

pub mod border;
pub mod config;
pub mod eval;
pub mod geodesy;
pub mod geometry;
pub mod georef;
pub mod kv;
pub mod lanelet2;
pub mod lanes;
pub mod marking;
pub mod pipeline;
pub mod raster;
pub mod render;
pub mod symbols;
pub mod synth;
pub mod xml;
