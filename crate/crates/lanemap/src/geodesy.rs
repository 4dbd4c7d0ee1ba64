//! UTM <-> WGS84 conversion via the transverse Mercator projection.
//!
//! Krueger series in the third flattening to sixth order (forward and
//! inverse), which is accurate to well under a millimetre anywhere inside a
//! UTM zone. Standard UTM parameters: scale 0.9996 at the central meridian,
//! false easting 500 km, false northing 10 000 km on the southern hemisphere.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeodesyError {
    #[error("utm zone {0} outside 1..=60")]
    BadZone(u8),
    #[error("easting {0} outside the zone validity range [100000, 900000]")]
    EastingOutOfRange(f64),
    #[error("northing {0} outside [0, 10000000]")]
    NorthingOutOfRange(f64),
    #[error("latitude {0} outside UTM coverage [-80, 84]")]
    LatitudeOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hemisphere {
    North,
    South,
}

impl Hemisphere {
    pub fn letter(self) -> char {
        match self {
            Hemisphere::North => 'N',
            Hemisphere::South => 'S',
        }
    }

    fn false_northing(self) -> f64 {
        match self {
            Hemisphere::North => 0.0,
            Hemisphere::South => 10_000_000.0,
        }
    }
}

// WGS84 ellipsoid.
const A: f64 = 6_378_137.0;
const F: f64 = 1.0 / 298.257_223_563;
const K0: f64 = 0.9996;
const FALSE_EASTING: f64 = 500_000.0;

/// Series coefficients derived from the third flattening n = f / (2 - f).
struct Series {
    /// Rectifying radius.
    radius: f64,
    alpha: [f64; 6],
    beta: [f64; 6],
    /// Conformal-to-geodetic latitude series (powers of e^2).
    delta: [f64; 4],
    /// First eccentricity.
    e: f64,
}

fn series() -> Series {
    let n = F / (2.0 - F);
    let n2 = n * n;
    let n3 = n2 * n;
    let n4 = n3 * n;
    let n5 = n4 * n;
    let n6 = n5 * n;
    let radius = A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    let alpha = [
        n / 2.0 - 2.0 / 3.0 * n2 + 5.0 / 16.0 * n3 + 41.0 / 180.0 * n4 - 127.0 / 288.0 * n5
            + 7891.0 / 37800.0 * n6,
        13.0 / 48.0 * n2 - 3.0 / 5.0 * n3 + 557.0 / 1440.0 * n4 + 281.0 / 630.0 * n5
            - 1_983_433.0 / 1_935_360.0 * n6,
        61.0 / 240.0 * n3 - 103.0 / 140.0 * n4
            + 15061.0 / 26880.0 * n5
            + 167_603.0 / 181_440.0 * n6,
        49561.0 / 161_280.0 * n4 - 179.0 / 168.0 * n5 + 6_601_661.0 / 7_257_600.0 * n6,
        34729.0 / 80640.0 * n5 - 3_418_889.0 / 1_995_840.0 * n6,
        212_378_941.0 / 319_334_400.0 * n6,
    ];
    let beta = [
        n / 2.0 - 2.0 / 3.0 * n2 + 37.0 / 96.0 * n3 - 1.0 / 360.0 * n4 - 81.0 / 512.0 * n5
            + 96199.0 / 604_800.0 * n6,
        n2 / 48.0 + n3 / 15.0 - 437.0 / 1440.0 * n4 + 46.0 / 105.0 * n5
            - 1_118_711.0 / 3_870_720.0 * n6,
        17.0 / 480.0 * n3 - 37.0 / 840.0 * n4 - 209.0 / 4480.0 * n5 + 5569.0 / 90720.0 * n6,
        4397.0 / 161_280.0 * n4 - 11.0 / 504.0 * n5 - 830_251.0 / 7_257_600.0 * n6,
        4583.0 / 161_280.0 * n5 - 108_847.0 / 3_991_680.0 * n6,
        20_648_693.0 / 638_668_800.0 * n6,
    ];
    let e2 = F * (2.0 - F);
    let e4 = e2 * e2;
    let e6 = e4 * e2;
    let e8 = e6 * e2;
    let delta = [
        e2 / 2.0 + 5.0 * e4 / 24.0 + e6 / 12.0 + 13.0 * e8 / 360.0,
        7.0 * e4 / 48.0 + 29.0 * e6 / 240.0 + 811.0 * e8 / 11520.0,
        7.0 * e6 / 120.0 + 81.0 * e8 / 1120.0,
        4279.0 * e8 / 161_280.0,
    ];
    Series {
        radius,
        alpha,
        beta,
        delta,
        e: e2.sqrt(),
    }
}

fn central_meridian_deg(zone: u8) -> f64 {
    f64::from(zone) * 6.0 - 183.0
}

fn validate_zone(zone: u8) -> Result<(), GeodesyError> {
    if (1..=60).contains(&zone) {
        Ok(())
    } else {
        Err(GeodesyError::BadZone(zone))
    }
}

/// Geodetic latitude/longitude (degrees) to UTM easting/northing (metres).
pub fn wgs84_to_utm(
    lat_deg: f64,
    lon_deg: f64,
    zone: u8,
    hemisphere: Hemisphere,
) -> Result<(f64, f64), GeodesyError> {
    validate_zone(zone)?;
    if !(-80.0..=84.0).contains(&lat_deg) {
        return Err(GeodesyError::LatitudeOutOfRange(lat_deg));
    }
    let s = series();
    let phi = lat_deg.to_radians();
    let mut dlon = lon_deg - central_meridian_deg(zone);
    while dlon > 180.0 {
        dlon -= 360.0;
    }
    while dlon < -180.0 {
        dlon += 360.0;
    }
    let lam = dlon.to_radians();

    // Conformal latitude.
    let t = (phi.sin().atanh() - s.e * (s.e * phi.sin()).atanh()).sinh();
    let xi_p = t.atan2(lam.cos());
    let eta_p = (lam.sin() / (t * t + lam.cos() * lam.cos()).sqrt()).asinh();

    let mut xi = xi_p;
    let mut eta = eta_p;
    for (j, a) in s.alpha.iter().enumerate() {
        let k = 2.0 * (j as f64 + 1.0);
        xi += a * (k * xi_p).sin() * (k * eta_p).cosh();
        eta += a * (k * xi_p).cos() * (k * eta_p).sinh();
    }

    let easting = FALSE_EASTING + K0 * s.radius * eta;
    let northing = hemisphere.false_northing() + K0 * s.radius * xi;
    Ok((easting, northing))
}

/// UTM easting/northing (metres) to geodetic latitude/longitude (degrees).
pub fn utm_to_wgs84(
    easting: f64,
    northing: f64,
    zone: u8,
    hemisphere: Hemisphere,
) -> Result<(f64, f64), GeodesyError> {
    validate_zone(zone)?;
    if !(100_000.0..=900_000.0).contains(&easting) {
        return Err(GeodesyError::EastingOutOfRange(easting));
    }
    if !(0.0..=10_000_000.0).contains(&northing) {
        return Err(GeodesyError::NorthingOutOfRange(northing));
    }
    let s = series();
    let xi = (northing - hemisphere.false_northing()) / (K0 * s.radius);
    let eta = (easting - FALSE_EASTING) / (K0 * s.radius);

    let mut xi_p = xi;
    let mut eta_p = eta;
    for (j, b) in s.beta.iter().enumerate() {
        let k = 2.0 * (j as f64 + 1.0);
        xi_p -= b * (k * xi).sin() * (k * eta).cosh();
        eta_p -= b * (k * xi).cos() * (k * eta).sinh();
    }

    // tan(chi) = sin(xi') / hypot(sinh(eta'), cos(xi')).
    let chi = (xi_p.sin() / eta_p.sinh().hypot(xi_p.cos())).atan();
    let mut phi = chi;
    for (j, d) in s.delta.iter().enumerate() {
        let k = 2.0 * (j as f64 + 1.0);
        phi += d * (k * chi).sin();
    }

    let lam = eta_p.sinh().atan2(xi_p.cos());
    let lon = central_meridian_deg(zone) + lam.to_degrees();
    Ok((phi.to_degrees(), lon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_meridian_maps_to_false_easting() {
        // Zone 32 central meridian is 9 degrees east.
        let (e, n) = wgs84_to_utm(50.0, 9.0, 32, Hemisphere::North).unwrap();
        assert!((e - 500_000.0).abs() < 1e-6, "easting {e}");
        assert!(n > 0.0);
        let (lat, lon) = utm_to_wgs84(500_000.0, n, 32, Hemisphere::North).unwrap();
        assert!((lon - 9.0).abs() < 1e-12, "lon {lon}");
        assert!((lat - 50.0).abs() < 1e-9);
    }

    #[test]
    fn equator_on_central_meridian_is_northing_zero() {
        let (e, n) = wgs84_to_utm(0.0, 3.0, 31, Hemisphere::North).unwrap();
        assert!((e - 500_000.0).abs() < 1e-6);
        assert!(n.abs() < 1e-6);
    }

    #[test]
    fn published_anchorage_vector() {
        // Open-data reference pair commonly used to validate UTM code.
        let (lat, lon) = utm_to_wgs84(385_273.02, 6_761_077.20, 6, Hemisphere::North).unwrap();
        assert!((lat - 60.9679875497).abs() < 1e-6, "lat {lat}");
        assert!((lon - -149.119325194).abs() < 1e-6, "lon {lon}");
    }

    #[test]
    fn southern_hemisphere_round_trip() {
        let (e, n) = wgs84_to_utm(-33.9, 18.4, 34, Hemisphere::South).unwrap();
        let (lat, lon) = utm_to_wgs84(e, n, 34, Hemisphere::South).unwrap();
        assert!((lat - -33.9).abs() < 1e-9);
        assert!((lon - 18.4).abs() < 1e-9);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert_eq!(
            utm_to_wgs84(50_000.0, 1.0, 32, Hemisphere::North),
            Err(GeodesyError::EastingOutOfRange(50_000.0))
        );
        assert_eq!(
            utm_to_wgs84(500_000.0, -5.0, 32, Hemisphere::North),
            Err(GeodesyError::NorthingOutOfRange(-5.0))
        );
        assert_eq!(
            utm_to_wgs84(500_000.0, 1.0, 0, Hemisphere::North),
            Err(GeodesyError::BadZone(0))
        );
        assert!(wgs84_to_utm(86.0, 9.0, 32, Hemisphere::North).is_err());
    }

    #[test]
    fn forward_inverse_identity_within_a_millimetre() {
        // Deterministic scatter across the zone interior.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut unit = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let lat = -79.0 + unit() * (84.0 + 79.0);
            let zone = 1 + (unit() * 60.0) as u8;
            let lon0 = central_meridian_deg(zone.min(60));
            let lon = lon0 - 2.5 + unit() * 5.0;
            let hemi = if lat < 0.0 {
                Hemisphere::South
            } else {
                Hemisphere::North
            };
            let (e, n) = wgs84_to_utm(lat, lon, zone.min(60), hemi).unwrap();
            let (lat2, lon2) = utm_to_wgs84(e, n, zone.min(60), hemi).unwrap();
            let (e2, n2) = wgs84_to_utm(lat2, lon2, zone.min(60), hemi).unwrap();
            assert!(
                (e - e2).abs() < 1e-3 && (n - n2).abs() < 1e-3,
                "round trip drift at lat {lat} lon {lon}: de {} dn {}",
                e - e2,
                n - n2,
            );
        }
    }
}
