use serde::{Deserialize, Serialize};

use super::SelectError;

/// Tunables of the selection pipeline. Every field has a default so partial
/// config files deserialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    /// Notification radius around the walker.
    pub radius_m: f64,
    /// Half of the forward sector; 50 gives a 100 degree sector.
    pub sector_half_angle_deg: f64,
    /// Minimum gap between two alerts for the same (user, content).
    pub cooldown_min: f64,
    /// Content closer than this counts as "at the walker's location".
    pub same_threshold_m: f64,
    /// Displacement below which the previous heading is kept.
    pub stationary_threshold_m: f64,
    /// Client polling period.
    pub poll_interval_s: f64,
    /// Offset of the local clock used for content time windows.
    pub utc_offset_min: i32,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            radius_m: 50.0,
            sector_half_angle_deg: 50.0,
            cooldown_min: 30.0,
            same_threshold_m: 10.0,
            stationary_threshold_m: 3.0,
            poll_interval_s: 150.0,
            utc_offset_min: 0,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), SelectError> {
        let bad = |key: &str, why: &str| Err(SelectError::InvalidConfig(format!("{key} {why}")));
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return bad("radius_m", "must be positive");
        }
        if !(self.sector_half_angle_deg > 0.0 && self.sector_half_angle_deg <= 180.0) {
            return bad("sector_half_angle_deg", "must be in (0, 180]");
        }
        if !(self.cooldown_min >= 0.0 && self.cooldown_min.is_finite()) {
            return bad("cooldown_min", "must be non-negative");
        }
        if !(self.same_threshold_m >= 0.0 && self.same_threshold_m.is_finite()) {
            return bad("same_threshold_m", "must be non-negative");
        }
        if !(self.stationary_threshold_m >= 0.0 && self.stationary_threshold_m.is_finite()) {
            return bad("stationary_threshold_m", "must be non-negative");
        }
        if !(self.poll_interval_s > 0.0 && self.poll_interval_s.is_finite()) {
            return bad("poll_interval_s", "must be positive");
        }
        if self.utc_offset_min.abs() > 24 * 60 {
            return bad("utc_offset_min", "must be within one day");
        }
        Ok(())
    }

    pub fn cooldown_s(&self) -> i64 {
        (self.cooldown_min * 60.0).round() as i64
    }

    /// Local minute of day for a UTC timestamp.
    pub fn local_minute(&self, utc_seconds: i64) -> u16 {
        let local = utc_seconds + i64::from(self.utc_offset_min) * 60;
        (local.rem_euclid(86_400) / 60) as u16
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SelectorConfig::default();
        c.validate().unwrap();
        assert_eq!(c.cooldown_s(), 1800);
        assert!((120.0..=180.0).contains(&c.poll_interval_s));
    }

    #[test]
    fn invalid_values() {
        let mut c = SelectorConfig { radius_m: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        c = SelectorConfig { sector_half_angle_deg: 181.0, ..Default::default() };
        assert!(c.validate().is_err());
        c = SelectorConfig { poll_interval_s: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn local_minutes() {
        let c = SelectorConfig { utc_offset_min: 540, ..Default::default() };
        // 00:00 UTC is 09:00 in UTC+9
        assert_eq!(c.local_minute(0), 540);
        assert_eq!(SelectorConfig::default().local_minute(-60), 1439);
        assert_eq!(SelectorConfig::default().local_minute(86_400 + 61), 1);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: SelectorConfig = serde_json::from_str(r#"{"radius_m": 80}"#).unwrap();
        assert_eq!(c.radius_m, 80.0);
        assert_eq!(c.cooldown_min, 30.0);
        assert!(serde_json::from_str::<SelectorConfig>(r#"{"radius": 80}"#).is_err());
    }
}
