//! Straight-track overpass geometry between a ground emitter and a LEO receiver.
//!
//! The model is flat-earth: the satellite flies a straight line at constant
//! altitude and ground speed, and the slant range is the hypotenuse of
//! altitude and horizontal displacement. Path loss is referenced to the
//! closest approach (directly overhead).

use crate::error::{Error, Result};
use crate::units::{GROUND_SPEED_KM_S, SAT_ALTITUDE_KM};

/// Loss at which received power halves, 10·log10(2) ≈ 3.01 dB.
pub const HALF_POWER_DB: f64 = 3.010_299_956_639_812;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverpassGeometry {
    altitude_km: f64,
    ground_speed_km_s: f64,
}

impl Default for OverpassGeometry {
    fn default() -> Self {
        OverpassGeometry {
            altitude_km: SAT_ALTITUDE_KM,
            ground_speed_km_s: GROUND_SPEED_KM_S,
        }
    }
}

/// Where a given loss budget is reached along the track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRange {
    pub slant_km: f64,
    pub horizontal_km: f64,
    pub transit_s: f64,
}

impl LossRange {
    /// Both sides of closest approach.
    pub fn detectable_window_s(&self) -> f64 {
        2.0 * self.transit_s
    }
}

impl OverpassGeometry {
    pub fn new(altitude_km: f64, ground_speed_km_s: f64) -> Result<Self> {
        if !(altitude_km > 0.0 && altitude_km.is_finite()) {
            return Err(Error::Argument(format!(
                "altitude {altitude_km} km must be positive"
            )));
        }
        if !(ground_speed_km_s > 0.0 && ground_speed_km_s.is_finite()) {
            return Err(Error::Argument(format!(
                "ground speed {ground_speed_km_s} km/s must be positive"
            )));
        }
        Ok(OverpassGeometry {
            altitude_km,
            ground_speed_km_s,
        })
    }

    pub fn altitude_km(&self) -> f64 {
        self.altitude_km
    }

    pub fn ground_speed_km_s(&self) -> f64 {
        self.ground_speed_km_s
    }

    /// Slant range `dt` seconds before or after closest approach.
    pub fn slant_range(&self, dt: f64) -> f64 {
        self.slant_range_at(self.ground_speed_km_s * dt)
    }

    pub fn slant_range_at(&self, horizontal_km: f64) -> f64 {
        self.altitude_km.hypot(horizontal_km)
    }

    /// Extra free-space path loss relative to closest approach.
    pub fn fspl_delta_db(&self, dt: f64) -> f64 {
        self.fspl_delta_db_at(self.ground_speed_km_s * dt)
    }

    pub fn fspl_delta_db_at(&self, horizontal_km: f64) -> f64 {
        20.0 * (self.slant_range_at(horizontal_km) / self.altitude_km).log10()
    }

    pub fn range_for_loss(&self, loss_db: f64) -> Result<LossRange> {
        if !(loss_db >= 0.0 && loss_db.is_finite()) {
            return Err(Error::Argument(format!(
                "loss {loss_db} dB must be nonnegative"
            )));
        }
        let slant_km = self.altitude_km * 10f64.powf(loss_db / 20.0);
        // Clamp guards the loss = 0 case against a -0.0 / tiny negative radicand.
        let horizontal_km = (slant_km * slant_km - self.altitude_km * self.altitude_km)
            .max(0.0)
            .sqrt();
        Ok(LossRange {
            slant_km,
            horizontal_km,
            transit_s: horizontal_km / self.ground_speed_km_s,
        })
    }

    /// How many persistence windows fit in the span during which an emitter
    /// stays within `loss_budget_db` of its overhead level. Values well above
    /// one mean the window cannot cut a genuine overpass short.
    pub fn persistence_margin(&self, window_s: f64, loss_budget_db: f64) -> Result<f64> {
        if !(window_s > 0.0 && window_s.is_finite()) {
            return Err(Error::Argument(format!(
                "window {window_s} s must be positive"
            )));
        }
        Ok(self.range_for_loss(loss_budget_db)?.detectable_window_s() / window_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slant_range_reference_points() {
        let g = OverpassGeometry::default();
        assert_eq!(g.slant_range(0.0), 500.0);
        let ten = g.slant_range(10.0);
        assert!((ten - 254_900f64.sqrt()).abs() < 1e-9);
        assert!((ten - 504.9).abs() < 0.05);
        assert_eq!(g.slant_range(-10.0), ten);
        let increase_pct = (ten / 500.0 - 1.0) * 100.0;
        assert!((increase_pct - 0.9752).abs() < 1e-4);
    }

    #[test]
    fn fspl_reference_points() {
        let g = OverpassGeometry::default();
        assert_eq!(g.fspl_delta_db(0.0), 0.0);
        let d = g.fspl_delta_db(10.0);
        assert!((d - 0.0843).abs() < 1e-4, "{d}");
        assert!((d - 0.085).abs() < 0.001);
    }

    #[test]
    fn range_for_three_db() {
        let g = OverpassGeometry::default();
        // Literal 3.0 dB.
        let r = g.range_for_loss(3.0).unwrap();
        assert!((r.slant_km - 706.27).abs() < 0.01, "{r:?}");
        assert!((r.horizontal_km - 498.81).abs() < 0.01);
        assert!((r.transit_s - 71.26).abs() < 0.01);
        // Half power: slant = 500·√2, horizontal = altitude.
        let h = g.range_for_loss(HALF_POWER_DB).unwrap();
        assert!((h.slant_km - 500.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!((h.horizontal_km - 500.0).abs() < 1e-6);
        assert!((h.transit_s - 500.0 / 7.0).abs() < 1e-6);
        assert!((140.0..=145.0).contains(&h.detectable_window_s()));
        assert!((140.0..=145.0).contains(&r.detectable_window_s()));
    }

    #[test]
    fn zero_loss_is_overhead() {
        let r = OverpassGeometry::default().range_for_loss(0.0).unwrap();
        assert_eq!(r.slant_km, 500.0);
        assert_eq!(r.horizontal_km, 0.0);
        assert_eq!(r.transit_s, 0.0);
        assert!(OverpassGeometry::default().range_for_loss(-1.0).is_err());
    }

    #[test]
    fn persistence_margin_values() {
        let g = OverpassGeometry::default();
        let m = g.persistence_margin(10.0, 3.0).unwrap();
        assert!((m - 14.25).abs() < 0.01, "{m}");
        let full = g.range_for_loss(3.0).unwrap().detectable_window_s();
        assert!((g.persistence_margin(full, 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(g.persistence_margin(20.0, 3.0).unwrap() < m);
        assert!(g.persistence_margin(0.0, 3.0).is_err());
    }

    #[test]
    fn parameterized_altitude() {
        let g = OverpassGeometry::new(510.0, 7.0).unwrap();
        assert!((g.slant_range(10.0) - 514.78).abs() < 0.01);
        assert!(OverpassGeometry::new(0.0, 7.0).is_err());
        assert!(OverpassGeometry::new(500.0, -1.0).is_err());
    }
}
