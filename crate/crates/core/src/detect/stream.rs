//! Streaming two-tier verification over epoch bins.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::rules::{eval_kurtosis_flag, eval_location, summarize_levels};
use super::{Cause, DetectorConfig, FlagRecord};
use crate::error::{Error, Result};
use crate::observation::{EpochRecord, EpochTime};
use crate::units::MAX_SAT_ID;

/// Run of consecutive flagged bins ending at `last_time`.
#[derive(Debug, Clone, Copy)]
struct Run {
    last_time: EpochTime,
    length: usize,
}

/// Stateful detector fed one epoch bin at a time.
///
/// Per satellite it keeps only the length of the current run of raw
/// exceedances; a missing bin or a non-exceeding bin ends the run.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    interval_ticks: i64,
    persistence_bins: usize,
    last_bin: Option<EpochTime>,
    runs: [Option<Run>; MAX_SAT_ID as usize + 1],
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Detector {
            interval_ticks: config.interval_ticks(),
            persistence_bins: config.persistence_bins(),
            config,
            last_bin: None,
            runs: [None; MAX_SAT_ID as usize + 1],
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Processes every record of one epoch bin. Bins must be presented in
    /// strictly increasing time order, with at most one record per satellite.
    /// Output is ordered by satellite id.
    pub fn step_epoch_bin(&mut self, records: &[EpochRecord]) -> Result<Vec<FlagRecord>> {
        let Some(first) = records.first() else {
            return Ok(Vec::new());
        };
        let t = first.epoch_time();
        if let Some(r) = records.iter().find(|r| r.epoch_time() != t) {
            return Err(Error::Argument(format!(
                "epoch bin {t} contains a record for epoch {}",
                r.epoch_time()
            )));
        }
        if let Some(previous) = self.last_bin {
            if t <= previous {
                return Err(Error::Sequencing { previous, got: t });
            }
        }
        let mut seen = [false; MAX_SAT_ID as usize + 1];
        for r in records {
            let slot = &mut seen[r.sat_id().get() as usize];
            if *slot {
                return Err(Error::Duplicate {
                    sat: r.sat_id().get(),
                    time: t,
                });
            }
            *slot = true;
        }

        let mut out: Vec<FlagRecord> = records.iter().map(|r| self.instantaneous(r)).collect();
        let exceeding = out.iter().filter(|f| f.raw_max).count();
        let simul = exceeding >= self.config.min_concurrent_sats;

        for flag in &mut out {
            let slot = &mut self.runs[flag.sat_id.get() as usize];
            let length = match (flag.raw_max, *slot) {
                (false, _) => 0,
                (true, Some(run))
                    if run.length > 0 && run.last_time.offset_ticks(self.interval_ticks) == t =>
                {
                    run.length + 1
                }
                (true, _) => 1,
            };
            *slot = Some(Run {
                last_time: t,
                length,
            });
            flag.simul = simul;
            flag.persist = length >= self.persistence_bins;
            flag.proposed = flag.raw_max && (flag.simul || flag.persist);
            flag.cause = if flag.proposed {
                Cause::from_flags(flag.simul, flag.persist)
            } else {
                Cause::None
            };
        }
        out.sort_by_key(|f| f.sat_id);
        self.last_bin = Some(t);
        Ok(out)
    }

    fn instantaneous(&self, record: &EpochRecord) -> FlagRecord {
        let cfg = &self.config;
        let in_region = eval_location(cfg, record);
        let levels: Vec<f64> = record
            .valid_channels()
            .filter_map(|c| c.noise_floor_db())
            .collect();
        let summary = summarize_levels(&levels);
        FlagRecord {
            sat_id: record.sat_id(),
            epoch_time: record.epoch_time(),
            in_region,
            max_db: summary.map(|s| s.max_db),
            mean_db: summary.map(|s| s.mean_db),
            raw_max: in_region && summary.is_some_and(|s| s.max_db > cfg.threshold_db),
            mean_flag: in_region && summary.is_some_and(|s| s.mean_db > cfg.threshold_db),
            kurtosis_flag: eval_kurtosis_flag(cfg, record),
            simul: false,
            persist: false,
            proposed: false,
            cause: Cause::None,
        }
    }
}

/// Iterator adapter grouping time-sorted records into epoch bins and driving
/// a [`Detector`]. Errors carry the 1-based ordinal of the offending record
/// and end the stream.
pub struct FlagStream<I> {
    detector: Detector,
    input: I,
    pending: Vec<EpochRecord>,
    ready: VecDeque<FlagRecord>,
    consumed: usize,
    finished: bool,
}

/// Runs all detectors over records sorted by epoch time (ties in any order).
pub fn run_stream<I>(config: DetectorConfig, records: I) -> Result<FlagStream<I::IntoIter>>
where
    I: IntoIterator<Item = EpochRecord>,
{
    Ok(FlagStream {
        detector: Detector::new(config)?,
        input: records.into_iter(),
        pending: Vec::new(),
        ready: VecDeque::new(),
        consumed: 0,
        finished: false,
    })
}

impl<I> FlagStream<I> {
    fn flush(&mut self) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let flags = self.detector.step_epoch_bin(&self.pending)?;
        self.pending.clear();
        self.ready.extend(flags);
        Ok(())
    }

    fn fail(&mut self, err: Error) -> Option<Result<FlagRecord>> {
        self.finished = true;
        self.pending.clear();
        Some(Err(Error::AtRecord {
            record: self.consumed,
            source: Box::new(err),
        }))
    }
}

impl<I> Iterator for FlagStream<I>
where
    I: Iterator<Item = EpochRecord>,
{
    type Item = Result<FlagRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(flag) = self.ready.pop_front() {
                return Some(Ok(flag));
            }
            if self.finished {
                return None;
            }
            match self.input.next() {
                Some(record) => {
                    self.consumed += 1;
                    if let Some(bin) = self.pending.first().map(EpochRecord::epoch_time) {
                        let t = record.epoch_time();
                        if t < bin {
                            return self.fail(Error::Sequencing {
                                previous: bin,
                                got: t,
                            });
                        }
                        if t > bin {
                            if let Err(e) = self.flush() {
                                return self.fail(e);
                            }
                        } else if self.pending.iter().any(|p| p.sat_id() == record.sat_id()) {
                            return self.fail(Error::Duplicate {
                                sat: record.sat_id().get(),
                                time: t,
                            });
                        }
                    }
                    self.pending.push(record);
                }
                None => {
                    self.finished = true;
                    if let Err(e) = self.flush() {
                        return self.fail(e);
                    }
                }
            }
        }
    }
}

/// Detects over time partitions in parallel.
///
/// Each partition is warmed up on the preceding persistence window of input
/// and keeps only the outputs inside its own span, so the result equals a
/// single [`run_stream`] pass over the same (time-sorted) records.
pub fn run_partitioned(
    config: &DetectorConfig,
    records: &[EpochRecord],
    partitions: usize,
) -> Result<Vec<FlagRecord>> {
    config.validate()?;
    if let Some(i) = records
        .windows(2)
        .position(|w| w[1].epoch_time() < w[0].epoch_time())
    {
        return Err(Error::AtRecord {
            record: i + 2,
            source: Box::new(Error::Sequencing {
                previous: records[i].epoch_time(),
                got: records[i + 1].epoch_time(),
            }),
        });
    }
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Ok(Vec::new());
    };
    let partitions = partitions.max(1) as i64;
    let start = first.epoch_time().ticks();
    let span = last.epoch_time().ticks() - start + 1;
    let chunk = (span + partitions - 1) / partitions;
    let warmup = config.interval_ticks() * (config.persistence_bins() as i64 - 1);

    let bounds: Vec<(i64, i64)> = (0..partitions)
        .map(|p| (start + p * chunk, start + (p + 1) * chunk))
        .filter(|(lo, _)| *lo < start + span)
        .collect();

    let parts: Vec<Result<Vec<FlagRecord>>> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let from = records.partition_point(|r| r.epoch_time().ticks() < lo - warmup);
            let to = records.partition_point(|r| r.epoch_time().ticks() < hi);
            let mut kept = Vec::new();
            for flag in run_stream(config.clone(), records[from..to].iter().cloned())? {
                let flag = flag.map_err(|e| match e {
                    Error::AtRecord { record, source } => Error::AtRecord {
                        record: record + from,
                        source,
                    },
                    other => other,
                })?;
                if flag.epoch_time.ticks() >= lo {
                    kept.push(flag);
                }
            }
            Ok(kept)
        })
        .collect();

    let mut out = Vec::with_capacity(records.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::{ChannelObservation, Region, SatId};
    use crate::units::from_db;

    fn rec(sat: u8, tick: i64, db: f64) -> EpochRecord {
        let ch = ChannelObservation::new(7, 33.0, 250.0, from_db(db), 0).unwrap();
        let quiet = ChannelObservation::new(9, 33.0, 250.0, from_db(36.0), 0).unwrap();
        EpochRecord::new(
            SatId::new(sat).unwrap(),
            EpochTime::from_ticks(tick),
            vec![ch, quiet, quiet, quiet],
        )
        .unwrap()
    }

    fn cfg() -> DetectorConfig {
        DetectorConfig::new(Region::white_sands())
    }

    fn run(records: Vec<EpochRecord>) -> Vec<FlagRecord> {
        run_stream(cfg(), records)
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .unwrap()
    }

    #[test]
    fn concurrent_exceedance_confirms_immediately() {
        let flags = run(vec![rec(1, 0, 45.0), rec(2, 0, 44.0), rec(3, 0, 37.0)]);
        assert_eq!(flags.len(), 3);
        for f in &flags[..2] {
            assert!(f.raw_max && f.simul && f.proposed && !f.persist);
            assert_eq!(f.cause, Cause::Concurrent);
        }
        assert!(!flags[2].proposed && flags[2].simul);
        assert_eq!(flags[2].cause, Cause::None);
    }

    #[test]
    fn persistence_needs_21_bins() {
        let flags = run((0..21).map(|t| rec(4, t, 45.0)).collect());
        for (i, f) in flags.iter().enumerate() {
            assert!(f.raw_max);
            assert_eq!(f.proposed, i == 20, "bin {}", i + 1);
        }
        assert_eq!(flags[20].cause, Cause::Persistent);

        let twenty = run((0..20).map(|t| rec(4, t, 45.0)).collect());
        assert!(twenty.iter().all(|f| !f.proposed && !f.persist));
    }

    #[test]
    fn gap_breaks_persistence() {
        let mut records: Vec<_> = (0..30)
            .filter(|t| *t != 10)
            .map(|t| rec(4, t, 45.0))
            .collect();
        records.push(rec(5, 10, 30.0)); // keeps bin 10 present for another satellite
        records.sort_by_key(|r| r.key());
        let flags = run(records);
        let sat4: Vec<_> = flags.iter().filter(|f| f.sat_id.get() == 4).collect();
        // run restarts at tick 11; 21 bins complete at tick 31, beyond the data
        assert!(sat4.iter().all(|f| !f.proposed));
    }

    #[test]
    fn isolated_spike_is_suppressed() {
        let flags = run((0..40)
            .flat_map(|t| {
                [
                    rec(1, t, if t == 17 { 48.0 } else { 37.0 }),
                    rec(2, t, 37.0),
                ]
            })
            .collect());
        assert!(flags.iter().any(|f| f.raw_max));
        assert!(flags.iter().all(|f| !f.proposed));
    }

    #[test]
    fn both_causes() {
        let mut records: Vec<_> = (0..25).map(|t| rec(1, t, 45.0)).collect();
        records.push(rec(2, 24, 45.0));
        records.sort_by_key(|r| r.key());
        let flags = run(records);
        let last = flags
            .iter()
            .find(|f| f.sat_id.get() == 1 && f.epoch_time.ticks() == 24)
            .unwrap();
        assert_eq!(last.cause, Cause::Both);
    }

    #[test]
    fn stream_errors() {
        let out_of_order = run_stream(cfg(), vec![rec(1, 5, 37.0), rec(1, 4, 37.0)])
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .unwrap_err();
        assert!(matches!(out_of_order, Error::AtRecord { record: 2, .. }));
        assert!(matches!(out_of_order.root(), Error::Sequencing { .. }));

        let dup = run_stream(
            cfg(),
            vec![rec(1, 5, 37.0), rec(2, 5, 37.0), rec(1, 5, 38.0)],
        )
        .unwrap()
        .collect::<Result<Vec<_>>>()
        .unwrap_err();
        assert!(matches!(dup, Error::AtRecord { record: 3, .. }));
        assert!(matches!(dup.root(), Error::Duplicate { sat: 1, .. }));

        assert!(run(Vec::new()).is_empty());
    }

    #[test]
    fn step_rejects_repeated_or_mixed_bins() {
        let mut d = Detector::new(cfg()).unwrap();
        d.step_epoch_bin(&[rec(1, 3, 37.0)]).unwrap();
        assert!(matches!(
            d.step_epoch_bin(&[rec(2, 3, 37.0)]),
            Err(Error::Sequencing { .. })
        ));
        assert!(d
            .step_epoch_bin(&[rec(1, 4, 37.0), rec(2, 5, 37.0)])
            .is_err());
        assert!(matches!(
            d.step_epoch_bin(&[rec(1, 6, 37.0), rec(1, 6, 37.0)]),
            Err(Error::Duplicate { .. })
        ));
        assert!(d.step_epoch_bin(&[]).unwrap().is_empty());
    }

    #[test]
    fn partitioned_matches_single_pass() {
        let mut records = Vec::new();
        for t in 0..400 {
            for sat in 1..=3u8 {
                if (t + sat as i64) % 37 == 0 {
                    continue;
                }
                let hot = (t / 50 + sat as i64) % 3 == 0;
                records.push(rec(sat, t, if hot { 44.0 } else { 37.0 }));
            }
        }
        let single = run(records.clone());
        for parts in [1, 2, 3, 7, 64] {
            assert_eq!(run_partitioned(&cfg(), &records, parts).unwrap(), single);
        }
        assert!(run_partitioned(&cfg(), &[], 4).unwrap().is_empty());
        let unsorted = vec![rec(1, 2, 37.0), rec(1, 1, 37.0)];
        assert!(run_partitioned(&cfg(), &unsorted, 2).is_err());
    }
}
