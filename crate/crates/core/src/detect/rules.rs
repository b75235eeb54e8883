//! Per-record decision rules. These are pure functions of one epoch record.

use super::DetectorConfig;
use crate::observation::EpochRecord;

/// Max and mean of the valid channel levels of one record, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSummary {
    pub max_db: f64,
    pub mean_db: f64,
    pub channels: usize,
}

/// Summarizes channel levels given in dB.
///
/// The mean is taken over the channels present, summed in ascending order so
/// the result does not depend on channel order, and kept inside
/// `[min, max]` against rounding.
pub fn summarize_levels(levels_db: &[f64]) -> Option<LevelSummary> {
    if levels_db.is_empty() {
        return None;
    }
    let mut sorted = levels_db.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Some(LevelSummary {
        max_db: max,
        mean_db: mean.clamp(min, max),
        channels: sorted.len(),
    })
}

fn record_levels(record: &EpochRecord) -> Option<LevelSummary> {
    let levels: Vec<f64> = record
        .valid_channels()
        .filter_map(|c| c.noise_floor_db())
        .collect();
    summarize_levels(&levels)
}

/// True when any valid channel's specular point falls inside the region.
pub fn eval_location(config: &DetectorConfig, record: &EpochRecord) -> bool {
    record
        .valid_channels()
        .any(|c| config.region.contains(c.sp_lat(), c.sp_lon()))
}

/// Raw maximum-based flag and the max level, `None` with no valid channel.
pub fn eval_max_flag(config: &DetectorConfig, record: &EpochRecord) -> (bool, Option<f64>) {
    match record_levels(record) {
        Some(l) => (
            l.max_db > config.threshold_db && eval_location(config, record),
            Some(l.max_db),
        ),
        None => (false, None),
    }
}

/// Mean-based flag and the mean level, `None` with no valid channel.
pub fn eval_mean_flag(config: &DetectorConfig, record: &EpochRecord) -> (bool, Option<f64>) {
    match record_levels(record) {
        Some(l) => (
            l.mean_db > config.threshold_db && eval_location(config, record),
            Some(l.mean_db),
        ),
        None => (false, None),
    }
}

pub fn eval_kurtosis_flag(config: &DetectorConfig, record: &EpochRecord) -> bool {
    record
        .valid_channels()
        .any(|c| c.has_flag_bit(config.kurtosis_rfi_bit))
        && eval_location(config, record)
}
