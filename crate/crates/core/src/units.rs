//! Physical constants and unit conversions shared by every module.

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Chips in one GPS C/A PRN code period.
pub const PRN_CHIPS_PER_CODE: u32 = 1023;

/// Duration of one PRN code period, seconds.
pub const CODE_PERIOD_S: f64 = 1.0e-3;

/// Default noise-floor detection threshold, dB.
pub const DEFAULT_THRESHOLD_DB: f64 = 41.0;

/// Nominal receiver altitude used by the overpass geometry, km.
pub const SAT_ALTITUDE_KM: f64 = 500.0;

/// Nominal ground-track speed, km/s.
pub const GROUND_SPEED_KM_S: f64 = 7.0;

/// Sampling interval of the reflection channels, seconds.
pub const EPOCH_INTERVAL_S: f64 = 0.5;

/// Backward-looking persistence window, seconds.
pub const PERSISTENCE_WINDOW_S: f64 = 10.0;

/// Maximum simultaneously tracked reflections per satellite.
pub const CHANNELS_PER_EPOCH: usize = 4;

/// Number of satellites in the constellation; satellite ids are `1..=MAX_SAT_ID`.
pub const MAX_SAT_ID: u8 = 8;

/// Converts a raw count value to decibels, `10·log10(counts)`.
///
/// Zero counts mark a fill value, so anything not strictly positive is
/// rejected rather than mapped to −∞.
pub fn to_db(counts: f64) -> Result<f64> {
    if counts > 0.0 && counts.is_finite() {
        Ok(10.0 * counts.log10())
    } else {
        Err(Error::InvalidObservation(format!(
            "noise floor counts must be positive and finite, got {counts}"
        )))
    }
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Duration and free-space length of one PRN chip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChipUnits {
    pub duration_s: f64,
    pub length_m: f64,
}

pub fn chip_units() -> ChipUnits {
    let duration_s = CODE_PERIOD_S / f64::from(PRN_CHIPS_PER_CODE);
    ChipUnits {
        duration_s,
        length_m: duration_s * SPEED_OF_LIGHT,
    }
}

/// Maps any finite longitude onto `[0, 360)`.
pub fn normalize_lon(lon: f64) -> f64 {
    let r = lon.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs,
    // and preserves the sign of -0.0.
    if r >= 360.0 {
        0.0
    } else {
        r + 0.0
    }
}
