//! Counting and scoring of detector output.
//!
//! Only in-region satellite-epochs are counted. Flags are counted in two
//! units: per satellite-epoch (`sat_epoch`) and per epoch time with any
//! flagged satellite (`epoch`).

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use chrono::{DateTime, NaiveDate, Utc};

use crate::detect::{summarize_levels, FlagRecord, Method};
use crate::error::{Error, Result};
use crate::observation::{EpochRecord, EpochTime, SatId};
use crate::scenario::TruthLabel;

pub const DAILY_CSV_HEADER: &str = "date,method,count,unit";
pub const SUMMARY_CSV_HEADER: &str = "method,flagged,total,pct";
pub const HOURLY_CSV_HEADER: &str = "hour,mean_db,max_db";
pub const SCORE_CSV_HEADER: &str = "method,precision,recall,far";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CountUnit {
    SatEpoch,
    Epoch,
}

impl CountUnit {
    pub const ALL: [CountUnit; 2] = [CountUnit::SatEpoch, CountUnit::Epoch];

    pub fn as_str(self) -> &'static str {
        match self {
            CountUnit::SatEpoch => "sat_epoch",
            CountUnit::Epoch => "epoch",
        }
    }
}

impl fmt::Display for CountUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn utc(t: EpochTime) -> Result<DateTime<Utc>> {
    DateTime::from_timestamp(t.whole_secs(), 0)
        .ok_or_else(|| Error::Argument(format!("epoch time {t} outside the calendar range")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DailyCount {
    pub date: NaiveDate,
    pub method: Method,
    pub unit: CountUnit,
    pub count: u64,
}

/// Flag counts per UTC day, method and unit. Days without in-region data are
/// omitted; every populated day lists every method and unit, zeros included.
pub fn daily_counts<'a, I>(flags: I) -> Result<Vec<DailyCount>>
where
    I: IntoIterator<Item = &'a FlagRecord>,
{
    // (date, method) -> sat-epoch count, plus per-time OR
    let mut per_sat: BTreeMap<(NaiveDate, Method), u64> = BTreeMap::new();
    let mut per_time: BTreeMap<EpochTime, [bool; 4]> = BTreeMap::new();
    let mut days = std::collections::BTreeSet::new();
    for f in flags.into_iter().filter(|f| f.in_region) {
        let date = utc(f.epoch_time)?.date_naive();
        days.insert(date);
        let any = per_time.entry(f.epoch_time).or_default();
        for (i, m) in Method::ALL.iter().enumerate() {
            let hit = f.flag(*m);
            *per_sat.entry((date, *m)).or_default() += u64::from(hit);
            any[i] |= hit;
        }
    }
    let mut per_time_counts: BTreeMap<(NaiveDate, Method), u64> = BTreeMap::new();
    for (t, any) in per_time {
        let date = utc(t)?.date_naive();
        for (i, m) in Method::ALL.iter().enumerate() {
            *per_time_counts.entry((date, *m)).or_default() += u64::from(any[i]);
        }
    }
    let mut out = Vec::new();
    for date in days {
        for method in Method::ALL {
            for unit in CountUnit::ALL {
                let table = match unit {
                    CountUnit::SatEpoch => &per_sat,
                    CountUnit::Epoch => &per_time_counts,
                };
                out.push(DailyCount {
                    date,
                    method,
                    unit,
                    count: table.get(&(date, method)).copied().unwrap_or(0),
                });
            }
        }
    }
    Ok(out)
}

pub fn daily_csv(rows: &[DailyCount]) -> String {
    let mut s = format!("{DAILY_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.date.format("%Y-%m-%d"),
            r.method,
            r.count,
            r.unit
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodCounts {
    pub method: Method,
    pub unit: CountUnit,
    pub flagged: u64,
    pub total: u64,
}

impl MethodCounts {
    /// Percentage of the total flagged; 0 for an empty total.
    pub fn percentage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.flagged as f64 / self.total as f64
        }
    }
}

/// Totals per method and unit. The satellite-epoch total counts distinct
/// in-region satellite-epochs; the epoch total counts distinct times.
pub fn summary<'a, I>(flags: I) -> Vec<MethodCounts>
where
    I: IntoIterator<Item = &'a FlagRecord>,
{
    let mut seen: HashMap<(EpochTime, SatId), [bool; 4]> = HashMap::new();
    for f in flags.into_iter().filter(|f| f.in_region) {
        let e = seen.entry((f.epoch_time, f.sat_id)).or_default();
        for (i, m) in Method::ALL.iter().enumerate() {
            e[i] |= f.flag(*m);
        }
    }
    let mut by_time: HashMap<EpochTime, [bool; 4]> = HashMap::new();
    for ((t, _), hits) in &seen {
        let e = by_time.entry(*t).or_default();
        for i in 0..4 {
            e[i] |= hits[i];
        }
    }
    let mut out = Vec::new();
    for unit in CountUnit::ALL {
        let (rows, total): (Box<dyn Iterator<Item = &[bool; 4]>>, u64) = match unit {
            CountUnit::SatEpoch => (Box::new(seen.values()), seen.len() as u64),
            CountUnit::Epoch => (Box::new(by_time.values()), by_time.len() as u64),
        };
        let mut flagged = [0u64; 4];
        for hits in rows {
            for i in 0..4 {
                flagged[i] += u64::from(hits[i]);
            }
        }
        for (i, method) in Method::ALL.iter().enumerate() {
            out.push(MethodCounts {
                method: *method,
                unit,
                flagged: flagged[i],
                total,
            });
        }
    }
    out
}

/// `summary.csv`: satellite-epoch rows, percentage rounded to whole percent.
pub fn summary_csv(counts: &[MethodCounts]) -> String {
    let mut s = format!("{SUMMARY_CSV_HEADER}\n");
    for c in counts.iter().filter(|c| c.unit == CountUnit::SatEpoch) {
        let _ = writeln!(
            s,
            "{},{},{},{:.0}",
            c.method,
            c.flagged,
            c.total,
            c.percentage()
        );
    }
    s
}

/// Human-readable table of both units with rounded and full-precision
/// percentages.
pub fn summary_table(counts: &[MethodCounts]) -> String {
    let mut s = String::new();
    for unit in CountUnit::ALL {
        let _ = writeln!(s, "unit: {unit}");
        let _ = writeln!(
            s,
            "{:<10} {:>10} {:>10} {:>5} {:>12}",
            "method", "flagged", "total", "pct", "pct_full"
        );
        for c in counts.iter().filter(|c| c.unit == unit) {
            let p = c.percentage();
            let _ = writeln!(
                s,
                "{:<10} {:>10} {:>10} {:>4.0}% {:>12.6}",
                c.method.as_str(),
                c.flagged,
                c.total,
                p,
                p
            );
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyRow {
    pub hour: DateTime<Utc>,
    pub mean_db: f64,
    pub max_db: f64,
}

fn hourly_from<I>(items: I) -> Result<Vec<HourlyRow>>
where
    I: IntoIterator<Item = (EpochTime, f64, f64)>,
{
    let mut acc: BTreeMap<i64, (f64, f64, u64)> = BTreeMap::new();
    for (t, mean, max) in items {
        utc(t)?;
        let e = acc.entry(t.whole_secs().div_euclid(3600)).or_default();
        e.0 += mean;
        e.1 += max;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(h, (mean, max, n))| {
            Ok(HourlyRow {
                hour: utc(EpochTime::from_ticks(
                    h * 3600 * EpochTime::TICKS_PER_SECOND,
                ))?,
                mean_db: mean / n as f64,
                max_db: max / n as f64,
            })
        })
        .collect()
}

/// Per UTC hour, the average of each epoch's channel mean and channel max
/// (dB, valid channels). Epochs without valid channels are skipped.
pub fn hourly_mean_max<'a, I>(records: I) -> Result<Vec<HourlyRow>>
where
    I: IntoIterator<Item = &'a EpochRecord>,
{
    hourly_from(records.into_iter().filter_map(|r| {
        let levels: Vec<f64> = r
            .valid_channels()
            .filter_map(|c| c.noise_floor_db())
            .collect();
        summarize_levels(&levels).map(|s| (r.epoch_time(), s.mean_db, s.max_db))
    }))
}

/// Same as [`hourly_mean_max`] from the levels stored in flag rows.
pub fn hourly_from_flags<'a, I>(flags: I) -> Result<Vec<HourlyRow>>
where
    I: IntoIterator<Item = &'a FlagRecord>,
{
    hourly_from(flags.into_iter().filter(|f| f.in_region).filter_map(|f| {
        match (f.mean_db, f.max_db) {
            (Some(mean), Some(max)) => Some((f.epoch_time, mean, max)),
            _ => None,
        }
    }))
}

pub fn hourly_csv(rows: &[HourlyRow]) -> String {
    let mut s = format!("{HOURLY_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.3},{:.3}",
            r.hour.format("%Y-%m-%dT%H:00Z"),
            r.mean_db,
            r.max_db
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    fn ratio(num: u64, den: u64) -> Option<f64> {
        (den > 0).then(|| num as f64 / den as f64)
    }

    pub fn precision(&self) -> Option<f64> {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn false_alarm_rate(&self) -> Option<f64> {
        Self::ratio(self.fp, self.fp + self.tn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodScore {
    pub method: Method,
    pub confusion: Confusion,
}

/// Confusion counts per method over the in-region flag rows. Every row must
/// have a truth label for the same satellite and time; labels without a flag
/// row are ignored.
pub fn score_against_truth<'a, F>(flags: F, truth: &[TruthLabel]) -> Result<Vec<MethodScore>>
where
    F: IntoIterator<Item = &'a FlagRecord>,
{
    let mut labels: HashMap<(EpochTime, SatId), bool> = HashMap::with_capacity(truth.len());
    for l in truth {
        if labels.insert((l.epoch_time, l.sat_id), l.jammed).is_some() {
            return Err(Error::Misaligned(format!(
                "duplicate truth label for satellite {} at {}",
                l.sat_id, l.epoch_time
            )));
        }
    }
    let mut m = [Confusion::default(); 4];
    for f in flags.into_iter().filter(|f| f.in_region) {
        let jammed = *labels.get(&(f.epoch_time, f.sat_id)).ok_or_else(|| {
            Error::Misaligned(format!(
                "no truth label for satellite {} at {}",
                f.sat_id, f.epoch_time
            ))
        })?;
        for (i, method) in Method::ALL.iter().enumerate() {
            let c = &mut m[i];
            match (f.flag(*method), jammed) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(Method::ALL
        .iter()
        .zip(m)
        .map(|(method, confusion)| MethodScore {
            method: *method,
            confusion,
        })
        .collect())
}

pub fn score_csv(scores: &[MethodScore]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut s = format!("{SCORE_CSV_HEADER}\n");
    for sc in scores {
        let c = &sc.confusion;
        let _ = writeln!(
            s,
            "{},{},{},{}",
            sc.method,
            opt(c.precision()),
            opt(c.recall()),
            opt(c.false_alarm_rate())
        );
    }
    s
}
