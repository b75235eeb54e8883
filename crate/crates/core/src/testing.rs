//! Reference implementations and random inputs for test suites.
//!
//! [`reference_flags`] recomputes every detector output by materializing the
//! raw exceedance series and checking each persistence window explicitly. It
//! shares no code with the streaming detector.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detect::{Cause, DetectorConfig, FlagRecord};
use crate::observation::{ChannelObservation, EpochRecord, EpochTime, SatId};

fn naive_levels(r: &EpochRecord) -> Vec<f64> {
    r.channels()
        .iter()
        .filter(|c| c.noise_floor_counts() > 0.0)
        .map(|c| 10.0 * c.noise_floor_counts().log10())
        .collect()
}

fn naive_in_region(config: &DetectorConfig, r: &EpochRecord) -> bool {
    let g = &config.region;
    r.channels().iter().any(|c| {
        c.noise_floor_counts() > 0.0
            && g.lat_min() <= c.sp_lat()
            && c.sp_lat() <= g.lat_max()
            && g.lon_min() <= c.sp_lon()
            && c.sp_lon() <= g.lon_max()
    })
}

/// Brute-force flags for time-sorted records, in `(time, sat)` order.
///
/// `mean_db` is a plain left-to-right mean and may differ from the detector's
/// in the last bits.
pub fn reference_flags(config: &DetectorConfig, records: &[EpochRecord]) -> Vec<FlagRecord> {
    let mut base: BTreeMap<(EpochTime, SatId), FlagRecord> = BTreeMap::new();
    for r in records {
        let levels = naive_levels(r);
        let in_region = naive_in_region(config, r);
        let max = levels.iter().cloned().reduce(f64::max);
        let mean = (!levels.is_empty()).then(|| levels.iter().sum::<f64>() / levels.len() as f64);
        let bit = 1u32 << config.kurtosis_rfi_bit;
        let kurt = r
            .channels()
            .iter()
            .any(|c| c.noise_floor_counts() > 0.0 && c.quality_flags() & bit != 0);
        base.insert(
            (r.epoch_time(), r.sat_id()),
            FlagRecord {
                sat_id: r.sat_id(),
                epoch_time: r.epoch_time(),
                in_region,
                max_db: max,
                mean_db: mean,
                raw_max: in_region && max.is_some_and(|m| m > config.threshold_db),
                mean_flag: in_region && mean.is_some_and(|m| m > config.threshold_db),
                kurtosis_flag: in_region && kurt,
                simul: false,
                persist: false,
                proposed: false,
                cause: Cause::None,
            },
        );
    }

    let raw: BTreeSet<(EpochTime, SatId)> = base
        .iter()
        .filter(|(_, f)| f.raw_max)
        .map(|(k, _)| *k)
        .collect();
    let mut exceeding_at: BTreeMap<EpochTime, usize> = BTreeMap::new();
    for (t, _) in &raw {
        *exceeding_at.entry(*t).or_default() += 1;
    }
    let step = config.interval_ticks();
    let bins = config.persistence_bins() as i64;

    let keys: Vec<_> = base.keys().copied().collect();
    for (t, s) in keys {
        let simul = exceeding_at.get(&t).copied().unwrap_or(0) >= config.min_concurrent_sats;
        let persist = (0..bins).all(|k| raw.contains(&(t.offset_ticks(-k * step), s)));
        let f = base.get_mut(&(t, s)).expect("key present");
        f.simul = simul;
        f.persist = persist;
        f.proposed = f.raw_max && (simul || persist);
        f.cause = match (f.proposed, simul, persist) {
            (false, _, _) => Cause::None,
            (true, true, true) => Cause::Both,
            (true, true, false) => Cause::Concurrent,
            (true, false, true) => Cause::Persistent,
            (true, false, false) => unreachable!("proposed implies a cause"),
        };
    }
    base.into_values().collect()
}

/// True when two flag rows agree exactly, except `mean_db` which may differ
/// by `mean_tol` relative.
pub fn flags_match(a: &FlagRecord, b: &FlagRecord, mean_tol: f64) -> bool {
    let mean_ok = match (a.mean_db, b.mean_db) {
        (Some(x), Some(y)) => (x - y).abs() <= mean_tol * x.abs().max(1.0),
        (None, None) => true,
        _ => false,
    };
    mean_ok
        && FlagRecord {
            mean_db: None,
            ..*a
        } == FlagRecord {
            mean_db: None,
            ..*b
        }
}

/// Shape of a random record stream.
#[derive(Debug, Clone)]
pub struct StreamParams {
    pub bins: usize,
    pub sats: u8,
    /// Probability that a satellite has no record in a bin.
    pub gap_prob: f64,
    /// Per-bin probability that a satellite switches between quiet and
    /// interfered states.
    pub switch_prob: f64,
    /// Level around which quiet/interfered channels are drawn, dB.
    pub pivot_db: f64,
}

impl Default for StreamParams {
    fn default() -> Self {
        StreamParams {
            bins: 500,
            sats: 4,
            gap_prob: 0.02,
            switch_prob: 0.03,
            pivot_db: 41.0,
        }
    }
}

/// Random time-sorted records starting at tick `0`, with runs of exceedances
/// long enough to trigger persistence, isolated spikes, missing bins, missing
/// channels, out-of-region specular points and random quality bits.
pub fn random_stream(seed: u64, p: &StreamParams) -> Vec<EpochRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interfered = vec![false; p.sats as usize];
    let mut out = Vec::with_capacity(p.bins * p.sats as usize);
    for bin in 0..p.bins {
        let t = EpochTime::from_ticks(bin as i64);
        for s in 1..=p.sats {
            let state = &mut interfered[s as usize - 1];
            if rng.random_bool(p.switch_prob) {
                *state = !*state;
            }
            if rng.random_bool(p.gap_prob) {
                continue;
            }
            let n = if rng.random_bool(0.9) {
                4
            } else {
                rng.random_range(0..4)
            };
            let hot = rng.random_range(0..4usize);
            let spike = rng.random_bool(0.01);
            let channels = (0..n)
                .map(|k| {
                    let db = if (*state || spike) && k == hot {
                        p.pivot_db + rng.random_range(-0.5..4.0)
                    } else {
                        p.pivot_db - rng.random_range(0.5..5.0)
                    };
                    let nf = if rng.random_bool(0.03) {
                        0.0
                    } else {
                        10f64.powf(db / 10.0)
                    };
                    let (lat, lon) = if rng.random_bool(0.1) {
                        (rng.random_range(-60.0..20.0), rng.random_range(0.0..200.0))
                    } else {
                        (rng.random_range(27.0..38.5), rng.random_range(245.0..263.0))
                    };
                    let qf = if rng.random_bool(0.05) {
                        1 << 2
                    } else {
                        rng.random_range(0..4)
                    };
                    ChannelObservation::new(k as u8 + 1, lat, lon, nf, qf).expect("valid channel")
                })
                .collect();
            out.push(
                EpochRecord::new(SatId::new(s).expect("valid id"), t, channels)
                    .expect("valid record"),
            );
        }
    }
    out
}
