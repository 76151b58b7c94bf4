use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geo::{haversine_distance, GeoPoint};

pub const DEFAULT_SPEED: f64 = 1.1;
pub const DEFAULT_POLL_INTERVAL: f64 = 150.0;

/// A walk along straight segments at constant speed, polled at a fixed
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RouteFile", into = "RouteFile")]
pub struct Route {
    waypoints: Vec<GeoPoint>,
    speed: f64,
    poll_interval: f64,
    /// Cumulative distance at each waypoint.
    offsets: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteFile {
    waypoints: Vec<GeoPoint>,
    #[serde(default = "default_speed")]
    speed: f64,
    #[serde(default = "default_poll")]
    poll_interval: f64,
}

fn default_speed() -> f64 {
    DEFAULT_SPEED
}

fn default_poll() -> f64 {
    DEFAULT_POLL_INTERVAL
}

impl TryFrom<RouteFile> for Route {
    type Error = SimError;

    fn try_from(f: RouteFile) -> Result<Self, SimError> {
        Route::new(f.waypoints, f.speed, f.poll_interval)
    }
}

impl From<Route> for RouteFile {
    fn from(r: Route) -> Self {
        RouteFile {
            waypoints: r.waypoints,
            speed: r.speed,
            poll_interval: r.poll_interval,
        }
    }
}

impl Route {
    pub fn new(waypoints: Vec<GeoPoint>, speed: f64, poll_interval: f64) -> Result<Self, SimError> {
        if waypoints.len() < 2 {
            return Err(SimError::InvalidRoute(format!(
                "a route needs at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(SimError::InvalidRoute(format!("speed must be positive, got {speed}")));
        }
        if !(poll_interval > 0.0 && poll_interval.is_finite()) {
            return Err(SimError::InvalidRoute(format!(
                "poll interval must be positive, got {poll_interval}"
            )));
        }
        let mut offsets = vec![0.0];
        for (i, w) in waypoints.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(SimError::InvalidRoute(format!(
                    "waypoints {} and {} coincide",
                    i,
                    i + 1
                )));
            }
            offsets.push(offsets[i] + haversine_distance(w[0], w[1]));
        }
        Ok(Route {
            waypoints,
            speed,
            poll_interval,
            offsets,
        })
    }

    /// Two-waypoint route from `start` along `bearing`.
    pub fn straight(
        start: GeoPoint,
        bearing: f64,
        length: f64,
        speed: f64,
        poll_interval: f64,
    ) -> Result<Self, SimError> {
        Route::new(vec![start, start.destination(bearing, length)], speed, poll_interval)
    }

    pub fn waypoints(&self) -> &[GeoPoint] {
        &self.waypoints
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn poll_interval(&self) -> f64 {
        self.poll_interval
    }

    pub fn length(&self) -> f64 {
        *self.offsets.last().expect("at least two waypoints")
    }

    pub fn duration(&self) -> f64 {
        self.length() / self.speed
    }

    /// Position after walking `distance` meters, interpolated linearly in
    /// latitude and longitude within the segment.
    pub fn position_at_distance(&self, distance: f64) -> GeoPoint {
        let d = distance.clamp(0.0, self.length());
        let seg = self
            .offsets
            .windows(2)
            .position(|w| d <= w[1])
            .unwrap_or(self.offsets.len() - 2);
        let (a, b) = (self.waypoints[seg], self.waypoints[seg + 1]);
        let f = (d - self.offsets[seg]) / (self.offsets[seg + 1] - self.offsets[seg]);
        GeoPoint::new(a.lat() + f * (b.lat() - a.lat()), a.lon() + f * (b.lon() - a.lon()))
            .expect("interpolation stays in range")
    }

    /// Whole-second poll times: every interval from 0 plus the arrival.
    pub fn poll_times(&self) -> Vec<i64> {
        let mut times = Vec::new();
        let duration = self.duration();
        let mut k = 0u64;
        loop {
            let t = k as f64 * self.poll_interval;
            if t >= duration {
                break;
            }
            times.push(t.round() as i64);
            k += 1;
        }
        let arrival = duration.round() as i64;
        if times.last().is_none_or(|&t| arrival > t) {
            times.push(arrival);
        }
        times
    }

    /// `(seconds since start, position)` for every poll.
    pub fn polls(&self) -> Vec<(i64, GeoPoint)> {
        self.poll_times()
            .into_iter()
            .map(|t| (t, self.position_at_distance(t as f64 * self.speed)))
            .collect()
    }
}
