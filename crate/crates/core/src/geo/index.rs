use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use super::{haversine_distance, GeoPoint, EARTH_RADIUS_M};

type Cell = (i64, i64);

/// Uniform lat/lon grid over the sphere.
///
/// Each id lives in exactly one cell keyed by floor division of its
/// coordinates. Column indices wrap modulo the grid width so queries that
/// straddle the antimeridian see both sides.
#[derive(Debug, Clone)]
pub struct GridIndex<K> {
    cell_size: f64,
    cols: i64,
    cells: HashMap<Cell, Vec<(K, GeoPoint)>>,
    locations: HashMap<K, Cell>,
}

impl<K> Default for GridIndex<K>
where
    K: Clone + Eq + Hash,
{
    fn default() -> Self {
        Self::new(Self::DEFAULT_CELL_SIZE)
    }
}

impl<K> GridIndex<K>
where
    K: Clone + Eq + Hash,
{
    /// Roughly 100 m of latitude.
    pub const DEFAULT_CELL_SIZE: f64 = 0.001;

    pub fn new(cell_size: f64) -> Self {
        assert!(
            cell_size > 0.0 && cell_size <= 90.0,
            "cell size must be in (0, 90] degrees"
        );
        GridIndex {
            cell_size,
            cols: (360.0 / cell_size).ceil() as i64,
            cells: HashMap::new(),
            locations: HashMap::new(),
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn contains(&self, id: &K) -> bool {
        self.locations.contains_key(id)
    }

    fn row_of(&self, lat: f64) -> i64 {
        (lat / self.cell_size).floor() as i64
    }

    fn col_of(&self, lon: f64) -> i64 {
        ((lon + 180.0) / self.cell_size).floor() as i64
    }

    fn cell_of(&self, p: GeoPoint) -> Cell {
        (self.row_of(p.lat()), self.col_of(p.lon()).rem_euclid(self.cols))
    }

    /// Inserts or moves `id`. Returns the previous location when the id was
    /// already indexed.
    pub fn insert(&mut self, id: K, point: GeoPoint) -> Option<GeoPoint> {
        let previous = self.remove(&id);
        let cell = self.cell_of(point);
        self.cells.entry(cell).or_default().push((id.clone(), point));
        self.locations.insert(id, cell);
        previous
    }

    pub fn remove(&mut self, id: &K) -> Option<GeoPoint> {
        let cell = self.locations.remove(id)?;
        let bucket = self.cells.get_mut(&cell)?;
        let pos = bucket.iter().position(|(k, _)| k == id)?;
        let (_, point) = bucket.swap_remove(pos);
        if bucket.is_empty() {
            self.cells.remove(&cell);
        }
        Some(point)
    }

    /// Ids whose stored point lies within `radius` meters of `center`.
    pub fn query_radius(&self, center: GeoPoint, radius: f64) -> HashSet<K> {
        self.within(center, radius).map(|(id, _, _)| id.clone()).collect()
    }

    /// Every `(id, point, distance)` within `radius` meters of `center`, in
    /// no particular order.
    pub fn within(
        &self,
        center: GeoPoint,
        radius: f64,
    ) -> impl Iterator<Item = (&K, GeoPoint, f64)> + '_ {
        let buckets: Vec<&Vec<(K, GeoPoint)>> = match self.cover(center, radius) {
            Some((rows, cols)) if rows.len() * cols.len() <= self.cells.len() => rows
                .iter()
                .flat_map(|r| cols.iter().map(move |c| (*r, *c)))
                .filter_map(|cell| self.cells.get(&cell))
                .collect(),
            // a sparse grid is cheaper to scan in full than cell by cell
            _ => self.cells.values().collect(),
        };
        buckets.into_iter().flatten().filter_map(move |(id, p)| {
            let d = haversine_distance(center, *p);
            (d <= radius).then_some((id, *p, d))
        })
    }

    /// Candidate rows and columns covering the spherical cap, with one cell
    /// of margin on each side. `None` means the cap touches a pole or spans
    /// every column.
    fn cover(&self, center: GeoPoint, radius: f64) -> Option<(Vec<i64>, Vec<i64>)> {
        let delta = radius / EARTH_RADIUS_M;
        if !delta.is_finite() || delta >= std::f64::consts::FRAC_PI_2 {
            return None;
        }
        let delta_deg = delta.to_degrees();
        let lat_lo = center.lat() - delta_deg;
        let lat_hi = center.lat() + delta_deg;
        if lat_lo <= -90.0 || lat_hi >= 90.0 {
            return None;
        }
        let ratio = delta.sin() / center.lat().to_radians().cos();
        if ratio >= 1.0 {
            return None;
        }
        let dlon = ratio.asin().to_degrees() * (1.0 + 1e-9);
        let c_lo = self.col_of(center.lon() - dlon) - 1;
        let c_hi = self.col_of(center.lon() + dlon) + 1;
        if c_hi - c_lo + 1 >= self.cols {
            return None;
        }
        let rows = (self.row_of(lat_lo) - 1..=self.row_of(lat_hi) + 1).collect();
        let cols = (c_lo..=c_hi).map(|c| c.rem_euclid(self.cols)).collect();
        Some((rows, cols))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, GeoPoint)> {
        self.cells.values().flatten().map(|(k, p)| (k, *p))
    }

    #[cfg(test)]
    fn occurrences(&self, id: &K) -> usize {
        self.cells.values().flatten().filter(|(k, _)| k == id).count()
    }
}
