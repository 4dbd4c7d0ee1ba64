//! Tile georeferencing: UTM anchor of the top-left pixel corner plus the
//! ground sampling distance, with the pixel <-> UTM conversions used
//! everywhere downstream.
//!
//! Pixel-center convention: integer pixel coordinates name whole pixels, and
//! pixel (px, py) maps to the UTM position of its center, half a GSD inside
//! the tile. Image y grows downward, northing grows upward.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geodesy::Hemisphere;
use crate::geometry::Point2;
use crate::kv::{KvError, KvReader};

#[derive(Debug, Error)]
pub enum GeoRefError {
    #[error("georeference: {0}")]
    Kv(#[from] KvError),
    #[error("georeference: gsd must be positive, got {0}")]
    BadGsd(f64),
    #[error("georeference: zone {0} outside 1..=60")]
    BadZone(u64),
    #[error("georeference: hemisphere must be N or S, got '{0}'")]
    BadHemisphere(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoReference {
    pub zone: u8,
    pub hemisphere: Hemisphere,
    /// UTM position of the top-left corner of the top-left pixel.
    pub origin_easting: f64,
    pub origin_northing: f64,
    /// Metres of ground per pixel.
    pub gsd: f64,
}

impl GeoReference {
    pub fn new(
        zone: u8,
        hemisphere: Hemisphere,
        origin_easting: f64,
        origin_northing: f64,
        gsd: f64,
    ) -> Result<Self, GeoRefError> {
        if !(1..=60).contains(&zone) {
            return Err(GeoRefError::BadZone(zone as u64));
        }
        if !(gsd > 0.0) {
            return Err(GeoRefError::BadGsd(gsd));
        }
        Ok(Self {
            zone,
            hemisphere,
            origin_easting,
            origin_northing,
            gsd,
        })
    }

    /// Pixel coordinates (sub-pixel allowed) to UTM metres, pixel-center
    /// convention.
    pub fn pixel_to_utm(&self, px: f64, py: f64) -> (f64, f64) {
        (
            self.origin_easting + (px + 0.5) * self.gsd,
            self.origin_northing - (py + 0.5) * self.gsd,
        )
    }

    /// Exact inverse of [`Self::pixel_to_utm`].
    pub fn utm_to_pixel(&self, easting: f64, northing: f64) -> (f64, f64) {
        (
            (easting - self.origin_easting) / self.gsd - 0.5,
            (self.origin_northing - northing) / self.gsd - 0.5,
        )
    }

    pub fn pixel_point_to_utm(&self, p: Point2) -> Point2 {
        let (e, n) = self.pixel_to_utm(p.x, p.y);
        Point2::new(e, n)
    }

    pub fn utm_point_to_pixel(&self, p: Point2) -> Point2 {
        let (x, y) = self.utm_to_pixel(p.x, p.y);
        Point2::new(x, y)
    }

    /// Parses the sidecar dialect (`zone`, `hemisphere`, `origin_easting`,
    /// `origin_northing`, `gsd`).
    pub fn from_sidecar(text: &str) -> Result<Self, GeoRefError> {
        let mut kv = KvReader::from_text(text)?;
        let zone = kv.require("zone")?;
        let zone: u64 = zone.parse().map_err(|_| KvError::BadValue {
            key: "zone".into(),
            message: format!("'{zone}' is not an integer"),
        })?;
        if !(1..=60).contains(&zone) {
            return Err(GeoRefError::BadZone(zone));
        }
        let hemisphere = match kv.require("hemisphere")?.as_str() {
            "N" | "n" => Hemisphere::North,
            "S" | "s" => Hemisphere::South,
            other => return Err(GeoRefError::BadHemisphere(other.to_string())),
        };
        let origin_easting = kv.require_f64("origin_easting")?;
        let origin_northing = kv.require_f64("origin_northing")?;
        let gsd = kv.require_f64("gsd")?;
        kv.finish()?;
        GeoReference::new(zone as u8, hemisphere, origin_easting, origin_northing, gsd)
    }

    pub fn load(path: &Path) -> Result<Self, GeoRefError> {
        Self::from_sidecar(&std::fs::read_to_string(path)?)
    }

    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        writeln!(out, "zone = {}", self.zone).unwrap();
        writeln!(out, "hemisphere = {}", self.hemisphere.letter()).unwrap();
        writeln!(out, "origin_easting = {}", self.origin_easting).unwrap();
        writeln!(out, "origin_northing = {}", self.origin_northing).unwrap();
        writeln!(out, "gsd = {}", self.gsd).unwrap();
        out
    }
}
