//! Pipeline configuration: every tunable threshold in one flat, auditable
//! namespace, serialized in the same `key = value` dialect as the
//! georeference sidecar.

use std::fmt::Write as _;

use thiserror::Error;

use crate::kv::{KvError, KvReader};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Kv(#[from] KvError),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Turn threshold (degrees) that splits road-border chains.
    pub border_max_turn_deg: f64,
    /// Douglas-Peucker tolerance in metres (1 px at 5 cm GSD).
    pub simplify_tolerance_m: f64,
    /// Majority-vote denoise passes over the class raster before extraction.
    pub denoise_passes: usize,
    /// Components smaller than this many pixels are treated as noise.
    pub min_component_px: usize,
    /// Non-drivable holes smaller than this many pixels are filled before
    /// border extraction (vehicles and debris, not traffic islands).
    pub border_fill_hole_px: usize,
    /// Outward probe depth when testing for an adjacent walkway.
    pub probe_dist_m: f64,
    /// Fraction of walkway probe hits that makes a border a curbstone.
    pub walkway_fraction: f64,
    /// Turn threshold (degrees) splitting marking centerlines at corners.
    pub marking_corner_turn_deg: f64,
    /// Markings shorter than this are dropped as fragments.
    pub marking_min_len_m: f64,
    /// Dash size filter.
    pub dash_min_len_m: f64,
    pub dash_max_len_m: f64,
    pub dash_max_width_m: f64,
    /// Dash grouping gates.
    pub dash_gap_max_m: f64,
    pub dash_len_tol: f64,
    pub dash_angle_tol_deg: f64,
    pub dash_lateral_tol_m: f64,
    /// Lane pairing gates.
    pub lane_width_min_m: f64,
    pub lane_width_max_m: f64,
    pub lane_angle_tol_deg: f64,
    pub lane_sample_step_m: f64,
    pub lane_match_fraction: f64,
    /// Template-match score below which a symbol is classified `other`.
    pub symbol_score_floor: f64,
    /// Evaluation protocol.
    pub resample_step_m: f64,
    pub match_gate_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            border_max_turn_deg: 45.0,
            simplify_tolerance_m: 0.05,
            denoise_passes: 1,
            min_component_px: 10,
            border_fill_hole_px: 4000,
            probe_dist_m: 0.5,
            walkway_fraction: 0.5,
            marking_corner_turn_deg: 70.0,
            marking_min_len_m: 0.3,
            dash_min_len_m: 0.5,
            dash_max_len_m: 6.0,
            dash_max_width_m: 0.5,
            dash_gap_max_m: 6.0,
            dash_len_tol: 0.5,
            dash_angle_tol_deg: 15.0,
            dash_lateral_tol_m: 0.5,
            lane_width_min_m: 2.0,
            lane_width_max_m: 6.0,
            lane_angle_tol_deg: 15.0,
            lane_sample_step_m: 1.0,
            lane_match_fraction: 0.5,
            symbol_score_floor: 0.7,
            resample_step_m: 0.10,
            match_gate_m: 0.20,
        }
    }
}

macro_rules! config_fields {
    ($macro:ident) => {
        $macro!(
            (border_max_turn_deg, f64),
            (simplify_tolerance_m, f64),
            (denoise_passes, usize),
            (min_component_px, usize),
            (border_fill_hole_px, usize),
            (probe_dist_m, f64),
            (walkway_fraction, f64),
            (marking_corner_turn_deg, f64),
            (marking_min_len_m, f64),
            (dash_min_len_m, f64),
            (dash_max_len_m, f64),
            (dash_max_width_m, f64),
            (dash_gap_max_m, f64),
            (dash_len_tol, f64),
            (dash_angle_tol_deg, f64),
            (dash_lateral_tol_m, f64),
            (lane_width_min_m, f64),
            (lane_width_max_m, f64),
            (lane_angle_tol_deg, f64),
            (lane_sample_step_m, f64),
            (lane_match_fraction, f64),
            (symbol_score_floor, f64),
            (resample_step_m, f64),
            (match_gate_m, f64)
        );
    };
}

impl PipelineConfig {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        macro_rules! emit {
            ($(($field:ident, $ty:ident)),*) => {
                $(writeln!(out, "{} = {}", stringify!($field), self.$field).unwrap();)*
            };
        }
        config_fields!(emit);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut kv = KvReader::from_text(text)?;
        let mut config = PipelineConfig::default();
        macro_rules! read {
            ($(($field:ident, $ty:ident)),*) => {
                $(read!(@one $field, $ty);)*
            };
            (@one $field:ident, f64) => {
                if let Some(v) = kv.take_f64(stringify!($field))? {
                    config.$field = v;
                }
            };
            (@one $field:ident, usize) => {
                if let Some(v) = kv.take_u64(stringify!($field))? {
                    config.$field = v as usize;
                }
            };
        }
        config_fields!(read);
        kv.finish()?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("border_max_turn_deg", self.border_max_turn_deg),
            ("simplify_tolerance_m", self.simplify_tolerance_m),
            ("probe_dist_m", self.probe_dist_m),
            ("walkway_fraction", self.walkway_fraction),
            ("marking_corner_turn_deg", self.marking_corner_turn_deg),
            ("marking_min_len_m", self.marking_min_len_m),
            ("dash_min_len_m", self.dash_min_len_m),
            ("dash_max_len_m", self.dash_max_len_m),
            ("dash_max_width_m", self.dash_max_width_m),
            ("dash_gap_max_m", self.dash_gap_max_m),
            ("dash_len_tol", self.dash_len_tol),
            ("dash_angle_tol_deg", self.dash_angle_tol_deg),
            ("dash_lateral_tol_m", self.dash_lateral_tol_m),
            ("lane_width_min_m", self.lane_width_min_m),
            ("lane_width_max_m", self.lane_width_max_m),
            ("lane_angle_tol_deg", self.lane_angle_tol_deg),
            ("lane_sample_step_m", self.lane_sample_step_m),
            ("lane_match_fraction", self.lane_match_fraction),
            ("symbol_score_floor", self.symbol_score_floor),
            ("resample_step_m", self.resample_step_m),
            ("match_gate_m", self.match_gate_m),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.dash_min_len_m >= self.dash_max_len_m {
            return Err(ConfigError::Invalid(format!(
                "dash_min_len_m {} must be below dash_max_len_m {}",
                self.dash_min_len_m, self.dash_max_len_m
            )));
        }
        if self.lane_width_min_m >= self.lane_width_max_m {
            return Err(ConfigError::Invalid(format!(
                "lane_width_min_m {} must be below lane_width_max_m {}",
                self.lane_width_min_m, self.lane_width_max_m
            )));
        }
        if self.resample_step_m >= self.match_gate_m {
            return Err(ConfigError::Invalid(format!(
                "resample_step_m {} must be below match_gate_m {}",
                self.resample_step_m, self.match_gate_m
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn text_round_trip_is_identical() {
        let config = PipelineConfig::default();
        let text = config.to_text();
        let reloaded = PipelineConfig::from_text(&text).unwrap();
        assert_eq!(reloaded, config);
        assert_eq!(reloaded.to_text(), text);
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let config = PipelineConfig::from_text("border_max_turn_deg = 30\n").unwrap();
        assert_eq!(config.border_max_turn_deg, 30.0);
        assert_eq!(config.match_gate_m, 0.20);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_gates() {
        assert!(PipelineConfig::from_text("no_such_key = 1\n").is_err());
        assert!(PipelineConfig::from_text("resample_step_m = 0.5\n").is_err());
        assert!(PipelineConfig::from_text("dash_min_len_m = 9\n").is_err());
        assert!(PipelineConfig::from_text("simplify_tolerance_m = -1\n").is_err());
    }
}
