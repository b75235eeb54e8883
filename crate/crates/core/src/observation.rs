//! Observation records and the geographic study region.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, CHANNELS_PER_EPOCH, MAX_SAT_ID};

/// Epoch time in whole half-seconds since a fixed UTC origin (the Unix epoch
/// for files produced by this crate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EpochTime(i64);

impl EpochTime {
    pub const TICKS_PER_SECOND: i64 = 2;

    pub const fn from_ticks(half_seconds: i64) -> Self {
        EpochTime(half_seconds)
    }

    /// Quantizes `secs` to the nearest half second.
    pub fn from_secs(secs: f64) -> Result<Self> {
        let ticks = (secs * Self::TICKS_PER_SECOND as f64).round();
        if !ticks.is_finite() || ticks.abs() > 2f64.powi(52) {
            return Err(Error::Argument(format!("epoch time {secs} out of range")));
        }
        Ok(EpochTime(ticks as i64))
    }

    pub const fn ticks(self) -> i64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / Self::TICKS_PER_SECOND as f64
    }

    /// Whole seconds since the origin, rounded toward −∞.
    pub fn whole_secs(self) -> i64 {
        self.0.div_euclid(Self::TICKS_PER_SECOND)
    }

    pub fn offset_ticks(self, ticks: i64) -> Self {
        EpochTime(self.0 + ticks)
    }
}

impl fmt::Display for EpochTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.as_secs())
    }
}

/// Satellite identifier within the eight-satellite constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SatId(u8);

impl SatId {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=MAX_SAT_ID).contains(&id) {
            Ok(SatId(id))
        } else {
            Err(Error::Argument(format!(
                "satellite id {id} outside 1..={MAX_SAT_ID}"
            )))
        }
    }

    pub const fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for SatId {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        SatId::new(id)
    }
}

impl From<SatId> for u8 {
    fn from(id: SatId) -> u8 {
        id.0
    }
}

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One reflection channel (PRN) observed by one satellite at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelObservation {
    prn: u8,
    sp_lat: f64,
    sp_lon: f64,
    noise_floor_counts: f64,
    quality_flags: u32,
}

impl ChannelObservation {
    /// `sp_lon` may be given in any convention; it is stored in `[0, 360)`.
    /// A `noise_floor_counts` of exactly zero marks a missing channel.
    pub fn new(
        prn: u8,
        sp_lat: f64,
        sp_lon: f64,
        noise_floor_counts: f64,
        quality_flags: u32,
    ) -> Result<Self> {
        if prn == 0 {
            return Err(Error::InvalidObservation("PRN must be positive".into()));
        }
        if !(-90.0..=90.0).contains(&sp_lat) {
            return Err(Error::InvalidObservation(format!(
                "specular latitude {sp_lat} outside [-90, 90]"
            )));
        }
        if !sp_lon.is_finite() {
            return Err(Error::InvalidObservation(format!(
                "specular longitude {sp_lon} is not finite"
            )));
        }
        if !(noise_floor_counts >= 0.0 && noise_floor_counts.is_finite()) {
            return Err(Error::InvalidObservation(format!(
                "noise floor counts {noise_floor_counts} must be finite and nonnegative"
            )));
        }
        Ok(ChannelObservation {
            prn,
            sp_lat,
            sp_lon: units::normalize_lon(sp_lon),
            noise_floor_counts,
            quality_flags,
        })
    }

    pub fn prn(&self) -> u8 {
        self.prn
    }

    pub fn sp_lat(&self) -> f64 {
        self.sp_lat
    }

    pub fn sp_lon(&self) -> f64 {
        self.sp_lon
    }

    pub fn noise_floor_counts(&self) -> f64 {
        self.noise_floor_counts
    }

    pub fn quality_flags(&self) -> u32 {
        self.quality_flags
    }

    pub fn is_valid(&self) -> bool {
        self.noise_floor_counts > 0.0
    }

    /// Noise floor in dB, `None` for a missing channel.
    pub fn noise_floor_db(&self) -> Option<f64> {
        units::to_db(self.noise_floor_counts).ok()
    }

    pub fn has_flag_bit(&self, bit: u8) -> bool {
        bit < 32 && self.quality_flags & (1 << bit) != 0
    }
}

/// All channels recorded by one satellite in one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    sat_id: SatId,
    epoch_time: EpochTime,
    channels: Vec<ChannelObservation>,
}

impl EpochRecord {
    pub fn new(
        sat_id: SatId,
        epoch_time: EpochTime,
        channels: Vec<ChannelObservation>,
    ) -> Result<Self> {
        if channels.len() > CHANNELS_PER_EPOCH {
            return Err(Error::Structural(format!(
                "{} channels in one epoch; at most {CHANNELS_PER_EPOCH} reflections are tracked simultaneously",
                channels.len()
            )));
        }
        Ok(EpochRecord {
            sat_id,
            epoch_time,
            channels,
        })
    }

    pub fn sat_id(&self) -> SatId {
        self.sat_id
    }

    pub fn epoch_time(&self) -> EpochTime {
        self.epoch_time
    }

    pub fn channels(&self) -> &[ChannelObservation] {
        &self.channels
    }

    pub fn valid_channels(&self) -> impl Iterator<Item = &ChannelObservation> {
        self.channels.iter().filter(|c| c.is_valid())
    }

    /// Ordering key used by the detectors and the file writers.
    pub fn key(&self) -> (EpochTime, SatId) {
        (self.epoch_time, self.sat_id)
    }
}

/// Latitude/longitude box, bounds inclusive. Longitudes live in `[0, 360)`;
/// boxes that would wrap through 0°E are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionBounds", into = "RegionBounds")]
pub struct Region {
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionBounds {
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
}

impl TryFrom<RegionBounds> for Region {
    type Error = Error;

    fn try_from(b: RegionBounds) -> Result<Self> {
        Region::new(b.lat_min, b.lat_max, b.lon_min, b.lon_max)
    }
}

impl From<Region> for RegionBounds {
    fn from(r: Region) -> Self {
        RegionBounds {
            lat_min: r.lat_min,
            lat_max: r.lat_max,
            lon_min: r.lon_min,
            lon_max: r.lon_max,
        }
    }
}

pub const REGION_PRESETS: &[&str] = &["white-sands", "middle-east"];

impl Region {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        for (name, v) in [("lat_min", lat_min), ("lat_max", lat_max)] {
            if !(-90.0..=90.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [-90, 90]")));
            }
        }
        for (name, v) in [("lon_min", lon_min), ("lon_max", lon_max)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} = {v} is not finite")));
            }
        }
        let (lon_min, lon_max) = (units::normalize_lon(lon_min), units::normalize_lon(lon_max));
        if lat_min > lat_max {
            return Err(Error::Config(format!(
                "lat_min {lat_min} exceeds lat_max {lat_max}"
            )));
        }
        if lon_min > lon_max {
            return Err(Error::Config(format!(
                "lon_min {lon_min} exceeds lon_max {lon_max} after normalization to [0, 360); \
                 regions crossing 0°E are not supported"
            )));
        }
        Ok(Region {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        })
    }

    /// White Sands Missile Range study box, 26.5°–39°N, 244°–264°E.
    pub fn white_sands() -> Self {
        Region::new(26.5, 39.0, 244.0, 264.0).expect("valid preset")
    }

    /// Middle East study box, 29°–37°N, 34°–60°E.
    pub fn middle_east() -> Self {
        Region::new(29.0, 37.0, 34.0, 60.0).expect("valid preset")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "white-sands" => Some(Self::white_sands()),
            "middle-east" => Some(Self::middle_east()),
            _ => None,
        }
    }

    pub fn lat_min(&self) -> f64 {
        self.lat_min
    }

    pub fn lat_max(&self) -> f64 {
        self.lat_max
    }

    pub fn lon_min(&self) -> f64 {
        self.lon_min
    }

    pub fn lon_max(&self) -> f64 {
        self.lon_max
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        let lon = units::normalize_lon(lon);
        self.lat_min <= lat && lat <= self.lat_max && self.lon_min <= lon && lon <= self.lon_max
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}..{}N,{}..{}E",
            self.lat_min, self.lat_max, self.lon_min, self.lon_max
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_time_quantizes_to_half_seconds() {
        assert_eq!(EpochTime::from_secs(10.26).unwrap().ticks(), 21);
        assert_eq!(EpochTime::from_secs(10.24).unwrap().ticks(), 20);
        let t = EpochTime::from_secs(1_746_057_600.5).unwrap();
        assert_eq!(t.as_secs(), 1_746_057_600.5);
        assert_eq!(t.to_string(), "1746057600.5");
        assert!(EpochTime::from_secs(f64::NAN).is_err());
    }

    #[test]
    fn sat_id_bounds() {
        assert!(SatId::new(0).is_err());
        assert!(SatId::new(1).is_ok());
        assert!(SatId::new(8).is_ok());
        assert!(SatId::new(9).is_err());
    }

    #[test]
    fn channel_normalizes_longitude() {
        let c = ChannelObservation::new(12, 33.0, -110.0, 100.0, 0).unwrap();
        assert_eq!(c.sp_lon(), 250.0);
        assert!(ChannelObservation::new(0, 0.0, 0.0, 1.0, 0).is_err());
        assert!(ChannelObservation::new(1, 91.0, 0.0, 1.0, 0).is_err());
        assert!(ChannelObservation::new(1, 0.0, 0.0, -1.0, 0).is_err());
        let missing = ChannelObservation::new(1, 0.0, 0.0, 0.0, 0).unwrap();
        assert!(!missing.is_valid());
        assert_eq!(missing.noise_floor_db(), None);
    }

    #[test]
    fn record_rejects_five_channels() {
        let ch = ChannelObservation::new(1, 0.0, 0.0, 1.0, 0).unwrap();
        let err = EpochRecord::new(
            SatId::new(1).unwrap(),
            EpochTime::from_ticks(0),
            vec![ch; 5],
        )
        .unwrap_err();
        assert!(err.to_string().contains("at most 4"));
    }

    #[test]
    fn white_sands_membership() {
        let ws = Region::white_sands();
        assert!(ws.contains(33.0, 250.0));
        assert!(ws.contains(33.0, -110.0));
        assert!(ws.contains(26.5, 244.0));
        assert!(ws.contains(39.0, 264.0));
        assert!(!ws.contains(26.49, 250.0));
        assert!(!ws.contains(33.0, 264.01));
        // independent mod-360 check of -110°
        assert_eq!((-110.0f64 + 360.0) % 360.0, 250.0);
    }

    #[test]
    fn region_presets_and_validation() {
        let me = Region::preset("middle-east").unwrap();
        assert_eq!(
            (me.lat_min(), me.lat_max(), me.lon_min(), me.lon_max()),
            (29.0, 37.0, 34.0, 60.0)
        );
        assert!(Region::preset("pacific").is_none());
        assert!(matches!(
            Region::new(40.0, 30.0, 0.0, 10.0),
            Err(Error::Config(_))
        ));
        // 350°E..10°E wraps through 0°E
        assert!(Region::new(0.0, 10.0, -10.0, 10.0).is_err());
        assert_eq!(
            Region::new(0.0, 1.0, -110.0, -100.0).unwrap().lon_min(),
            250.0
        );
    }
}
