//! Noise-floor RFI detectors.
//!
//! Three detectors run side by side over the same epoch stream:
//!
//! * **kurtosis**: any in-region channel carries the product's RFI quality bit;
//! * **mean**: the mean of the channel noise floors (dB) exceeds the threshold;
//! * **proposed**: the *maximum* channel noise floor exceeds the threshold
//!   (`raw_max`), confirmed either because enough satellites exceed it in the
//!   same epoch bin (`simul`) or because this satellite has exceeded it in every
//!   bin of the trailing persistence window (`persist`).
//!
//! All comparisons against the threshold are strict.

mod csv;
mod rules;
mod stream;

use std::fmt;
use std::str::FromStr;

pub use self::csv::{
    read_flag_csv, write_flag_csv, FlagCsvWriter, FLAG_CSV_FORMAT_VERSION, FLAG_CSV_HEADER,
};
pub use self::rules::{
    eval_kurtosis_flag, eval_location, eval_max_flag, eval_mean_flag, summarize_levels,
    LevelSummary,
};
pub use self::stream::{run_partitioned, run_stream, Detector, FlagStream};

use crate::error::{Error, Result};
use crate::observation::{EpochTime, Region, SatId};
use crate::units::{DEFAULT_THRESHOLD_DB, EPOCH_INTERVAL_S, PERSISTENCE_WINDOW_S};

/// Quality-flag bit carrying the kurtosis RFI indication. The bit position
/// depends on the product version, hence configurable.
pub const DEFAULT_KURTOSIS_RFI_BIT: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub threshold_db: f64,
    pub region: Region,
    pub persistence_window_s: f64,
    pub epoch_interval_s: f64,
    pub min_concurrent_sats: usize,
    pub kurtosis_rfi_bit: u8,
}

impl DetectorConfig {
    pub fn new(region: Region) -> Self {
        DetectorConfig {
            threshold_db: DEFAULT_THRESHOLD_DB,
            region,
            persistence_window_s: PERSISTENCE_WINDOW_S,
            epoch_interval_s: EPOCH_INTERVAL_S,
            min_concurrent_sats: 2,
            kurtosis_rfi_bit: DEFAULT_KURTOSIS_RFI_BIT,
        }
    }

    pub fn with_threshold(mut self, threshold_db: f64) -> Self {
        self.threshold_db = threshold_db;
        self
    }

    pub fn with_window(mut self, persistence_window_s: f64) -> Self {
        self.persistence_window_s = persistence_window_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold_db.is_finite() {
            return Err(Error::Config(format!(
                "threshold {} dB is not finite",
                self.threshold_db
            )));
        }
        let ticks = self.epoch_interval_s * EpochTime::TICKS_PER_SECOND as f64;
        if !(self.epoch_interval_s > 0.0 && is_whole(ticks)) {
            return Err(Error::Config(format!(
                "epoch interval {} s must be a positive multiple of 0.5 s",
                self.epoch_interval_s
            )));
        }
        let ratio = self.persistence_window_s / self.epoch_interval_s;
        if !(self.persistence_window_s > 0.0 && is_whole(ratio)) {
            return Err(Error::Config(format!(
                "persistence window {} s must be a positive multiple of the {} s epoch interval",
                self.persistence_window_s, self.epoch_interval_s
            )));
        }
        if self.min_concurrent_sats < 2 {
            return Err(Error::Config(format!(
                "concurrence needs at least 2 satellites, got {}",
                self.min_concurrent_sats
            )));
        }
        if self.kurtosis_rfi_bit >= 32 {
            return Err(Error::Config(format!(
                "quality flag bit {} outside 0..32",
                self.kurtosis_rfi_bit
            )));
        }
        Ok(())
    }

    /// Epoch interval in [`EpochTime`] ticks.
    pub fn interval_ticks(&self) -> i64 {
        (self.epoch_interval_s * EpochTime::TICKS_PER_SECOND as f64).round() as i64
    }

    /// Consecutive flagged bins needed for persistence: both ends of the
    /// window are included, so 21 bins for 10 s at 2 Hz.
    pub fn persistence_bins(&self) -> usize {
        (self.persistence_window_s / self.epoch_interval_s).round() as usize + 1
    }
}

fn is_whole(x: f64) -> bool {
    x.is_finite() && (x - x.round()).abs() < 1e-9 && x.round() >= 1.0
}

/// Why the proposed detector confirmed an exceedance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Cause {
    #[default]
    None,
    Concurrent,
    Persistent,
    Both,
}

impl Cause {
    pub fn from_flags(simul: bool, persist: bool) -> Cause {
        match (simul, persist) {
            (false, false) => Cause::None,
            (true, false) => Cause::Concurrent,
            (false, true) => Cause::Persistent,
            (true, true) => Cause::Both,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Cause::None => "none",
            Cause::Concurrent => "concurrent",
            Cause::Persistent => "persistent",
            Cause::Both => "both",
        }
    }
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cause {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Cause::None),
            "concurrent" => Ok(Cause::Concurrent),
            "persistent" => Ok(Cause::Persistent),
            "both" => Ok(Cause::Both),
            other => Err(Error::Argument(format!("unknown cause {other:?}"))),
        }
    }
}

/// Detector outputs for one satellite-epoch.
///
/// `cause` records why the proposed detector fired; it is [`Cause::None`]
/// exactly when `proposed` is false, even if `simul` or `persist` hold on
/// their own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlagRecord {
    pub sat_id: SatId,
    pub epoch_time: EpochTime,
    /// Any valid channel's specular point lies inside the study region.
    pub in_region: bool,
    pub max_db: Option<f64>,
    pub mean_db: Option<f64>,
    pub raw_max: bool,
    pub mean_flag: bool,
    pub kurtosis_flag: bool,
    pub simul: bool,
    pub persist: bool,
    pub proposed: bool,
    pub cause: Cause,
}

impl FlagRecord {
    pub fn flag(&self, method: Method) -> bool {
        match method {
            Method::Kurtosis => self.kurtosis_flag,
            Method::Mean => self.mean_flag,
            Method::Proposed => self.proposed,
            Method::RawMax => self.raw_max,
        }
    }
}

/// Detection methods compared by the evaluation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Kurtosis,
    Mean,
    Proposed,
    RawMax,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Kurtosis,
        Method::Mean,
        Method::Proposed,
        Method::RawMax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Kurtosis => "kurtosis",
            Method::Mean => "mean",
            Method::Proposed => "proposed",
            Method::RawMax => "raw_max",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
