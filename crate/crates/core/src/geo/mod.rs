//! Spherical-earth geometry: distances, bearings and direction sectors.

mod index;

pub use index::GridIndex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean earth radius used for every distance computation, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    InvalidLatitude(f64),
    #[error("longitude {0} is not finite")]
    InvalidLongitude(f64),
    #[error("bearing is undefined between identical points")]
    DegenerateSegment,
}

/// A WGS84 position in decimal degrees.
///
/// Latitude is checked to lie in `[-90, 90]`; longitude is normalized into
/// `[-180, 180)` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidLatitude(lat));
        }
        if !lon.is_finite() {
            return Err(GeoError::InvalidLongitude(lon));
        }
        Ok(GeoPoint { lat, lon: normalize_lon(lon) })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Point reached by travelling `distance` meters from `self` along the
    /// great circle starting at `bearing` degrees.
    pub fn destination(&self, bearing: f64, distance: f64) -> GeoPoint {
        let delta = distance / EARTH_RADIUS_M;
        let theta = bearing.to_radians();
        let phi1 = self.lat.to_radians();
        let lambda1 = self.lon.to_radians();
        let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).asin();
        let lambda2 = lambda1
            + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
        GeoPoint {
            lat: phi2.to_degrees().clamp(-90.0, 90.0),
            lon: normalize_lon(lambda2.to_degrees()),
        }
    }
}

/// Folds any finite longitude into `[-180, 180)`.
pub fn normalize_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Folds any finite angle into `[0, 360)`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let a = angle.rem_euclid(360.0);
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Great-circle distance in meters (haversine formula).
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let s_phi = (dphi * 0.5).sin();
    let s_lambda = (dlambda * 0.5).sin();
    // the sum is symmetric in (a, b) term by term, which keeps the result
    // bit-identical under argument swap
    let h = s_phi * s_phi + phi1.cos() * phi2.cos() * s_lambda * s_lambda;
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Forward azimuth at `a` toward `b`, degrees in `[0, 360)`, north = 0.
pub fn initial_bearing(a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    if haversine_distance(a, b) == 0.0 {
        return Err(GeoError::DegenerateSegment);
    }
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    // antipodal pairs have no unique great circle
    if y.abs() < 1e-15 && x.abs() < 1e-15 {
        return Err(GeoError::DegenerateSegment);
    }
    Ok(normalize_degrees(y.atan2(x).to_degrees()))
}

/// Minimal absolute difference between two directions, in `[0, 180]`.
pub fn angular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// True when `target_bearing` lies within `half_angle` degrees of `heading`.
/// The boundary is inclusive, so a half angle of 50 covers a 100 degree
/// sector ahead.
pub fn in_sector(heading: f64, target_bearing: f64, half_angle: f64) -> bool {
    angular_difference(heading, target_bearing) <= half_angle
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    // spherical law of cosines, an algebraically separate route to the
    // central angle
    fn law_of_cosines(a: GeoPoint, b: GeoPoint) -> f64 {
        let (p1, p2) = (a.lat().to_radians(), b.lat().to_radians());
        let dl = (b.lon() - a.lon()).to_radians();
        let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
        EARTH_RADIUS_M * c.clamp(-1.0, 1.0).acos()
    }

    // azimuth from the unit-vector construction: project the chord a->b onto
    // the local north and east axes at a
    fn vector_azimuth(a: GeoPoint, b: GeoPoint) -> f64 {
        let to_xyz = |q: GeoPoint| {
            let (la, lo) = (q.lat().to_radians(), q.lon().to_radians());
            [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
        };
        let (la, lo) = (a.lat().to_radians(), a.lon().to_radians());
        let va = to_xyz(a);
        let vb = to_xyz(b);
        let d = [vb[0] - va[0], vb[1] - va[1], vb[2] - va[2]];
        let north = [-la.sin() * lo.cos(), -la.sin() * lo.sin(), la.cos()];
        let east = [-lo.sin(), lo.cos(), 0.0];
        let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        normalize_degrees(dot(d, east).atan2(dot(d, north)).to_degrees())
    }

    #[test]
    fn identical_points_are_zero_apart() {
        assert_eq!(haversine_distance(p(35.0, 135.0), p(35.0, 135.0)), 0.0);
    }

    #[test]
    fn quarter_great_circle() {
        let d = haversine_distance(p(0.0, 0.0), p(0.0, 90.0));
        let expected = std::f64::consts::PI * EARTH_RADIUS_M / 2.0;
        assert!((d - expected).abs() < 1.0);
        assert!((d - 10_007_543.0).abs() < 1.0);
    }

    #[test]
    fn ueno_distance_matches_law_of_cosines() {
        let (a, b) = (p(35.7148, 139.7745), p(35.7238, 139.7745));
        let d = haversine_distance(a, b);
        let oracle = law_of_cosines(a, b);
        assert!((d - oracle).abs() < 0.01, "{d} vs {oracle}");
        // 0.009 degrees of latitude
        assert!((d - 1000.75).abs() < 0.5);
    }

    #[test]
    fn cardinal_bearings() {
        assert_eq!(initial_bearing(p(0.0, 0.0), p(1.0, 0.0)).unwrap(), 0.0);
        assert!((initial_bearing(p(0.0, 0.0), p(0.0, 1.0)).unwrap() - 90.0).abs() < 1e-12);
        assert!((initial_bearing(p(0.0, 0.0), p(-1.0, 0.0)).unwrap() - 180.0).abs() < 1e-12);
        assert!((initial_bearing(p(0.0, 0.0), p(0.0, -1.0)).unwrap() - 270.0).abs() < 1e-12);
    }

    #[test]
    fn bearing_matches_vector_oracle() {
        let (a, b) = (p(35.71, 139.77), p(35.72, 139.78));
        let got = initial_bearing(a, b).unwrap();
        let oracle = vector_azimuth(a, b);
        assert!(angular_difference(got, oracle) < 0.01, "{got} vs {oracle}");
    }

    #[test]
    fn degenerate_bearing_is_an_error() {
        let a = p(35.0, 139.0);
        assert_eq!(initial_bearing(a, a), Err(GeoError::DegenerateSegment));
        assert_eq!(
            initial_bearing(p(0.0, 0.0), p(0.0, -180.0)),
            Err(GeoError::DegenerateSegment)
        );
    }

    #[test]
    fn sector_examples() {
        assert!(in_sector(0.0, 0.0, 50.0));
        assert!(!in_sector(0.0, 180.0, 50.0));
        assert!(in_sector(350.0, 30.0, 50.0));
        assert!(in_sector(0.0, 50.0, 50.0));
        assert!(in_sector(0.0, 310.0, 50.0));
        assert!(!in_sector(0.0, 50.000001, 50.0));
        assert!(in_sector(0.0, 180.0, 180.0));
    }

    #[test]
    fn longitude_normalization() {
        assert_eq!(p(0.0, 180.0).lon(), -180.0);
        assert_eq!(p(0.0, 540.0).lon(), -180.0);
        assert_eq!(p(0.0, -190.0).lon(), 170.0);
        assert_eq!(normalize_lon(-1e-20), -1e-20);
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn destination_round_trips_with_distance_and_bearing() {
        let start = p(35.7148, 139.7745);
        for bearing in [0.0, 45.0, 90.0, 200.0, 359.0] {
            let end = start.destination(bearing, 250.0);
            assert!((haversine_distance(start, end) - 250.0).abs() < 1e-6);
            let b = initial_bearing(start, end).unwrap();
            assert!(angular_difference(b, bearing) < 1e-6);
        }
    }

    #[test]
    fn geopoint_rejects_bad_json() {
        let err = serde_json::from_str::<GeoPoint>(r#"{"lat":91.0,"lon":0.0}"#);
        assert!(err.is_err());
        let ok: GeoPoint = serde_json::from_str(r#"{"lat":1.5,"lon":200.0}"#).unwrap();
        assert_eq!(ok.lon(), -160.0);
    }
}
