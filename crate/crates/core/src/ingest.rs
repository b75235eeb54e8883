//! File formats at the data boundary.
//!
//! Epoch records travel as NDJSON, one satellite-epoch per line:
//!
//! ```text
//! {"sat":3,"t":1746057600.0,"ch":[{"prn":12,"lat":33.1,"lon":253.2,"nf":12589.3,"qf":0}]}
//! ```
//!
//! * `sat`: satellite id, 1–8
//! * `t`: seconds since the Unix epoch (UTC); quantized to the nearest 0.5 s
//! * `ch`: zero to four channels
//! * `prn`: PRN number; `lat`/`lon`: specular point (degrees, longitude
//!   stored in `[0, 360)`); `nf`: noise floor in raw counts (`0` = missing);
//!   `qf`: 32-bit quality flag word
//!
//! The writer emits exactly this field order with shortest round-trip floats,
//! so writing parsed input canonicalizes it.
//!
//! Truth labels are CSV with header `epoch_time,sat,jammed`. Region files are
//! TOML holding `lat_min`, `lat_max`, `lon_min`, `lon_max`, or a single
//! `preset` naming one of [`REGION_PRESETS`](crate::observation::REGION_PRESETS).

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::observation::{ChannelObservation, EpochRecord, EpochTime, Region, SatId};
use crate::scenario::TruthLabel;
use crate::units::CHANNELS_PER_EPOCH;

pub const RECORD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Stop at the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and keep their errors in the report.
    Lenient,
}

/// Iterator over the records of an NDJSON stream. Blank lines are ignored.
/// Invalid UTF-8 and I/O failures end the stream in either mode.
pub struct RecordReader<R> {
    input: R,
    mode: ParseMode,
    line_no: usize,
    skipped: Vec<Error>,
    done: bool,
    buf: Vec<u8>,
}

pub fn parse_records<R: BufRead>(input: R, mode: ParseMode) -> RecordReader<R> {
    RecordReader {
        input,
        mode,
        line_no: 0,
        skipped: Vec::new(),
        done: false,
        buf: Vec::new(),
    }
}

impl<R> RecordReader<R> {
    /// Errors for lines skipped in lenient mode.
    pub fn skipped(&self) -> &[Error] {
        &self.skipped
    }

    /// Number of the last line read (1-based).
    pub fn line(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<EpochRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.input.read_until(b'\n', &mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line_no += 1;
                    let text = match std::str::from_utf8(&self.buf) {
                        Ok(t) => t,
                        Err(e) => {
                            self.done = true;
                            return Some(Err(Error::Parse {
                                line: self.line_no,
                                field: "<line>".into(),
                                message: format!("invalid UTF-8: {e}"),
                            }));
                        }
                    };
                    let text = text.trim_end_matches(['\n', '\r']);
                    if text.trim().is_empty() {
                        continue;
                    }
                    match parse_record_line(text, self.line_no) {
                        Ok(r) => return Some(Ok(r)),
                        Err(e) if self.mode == ParseMode::Lenient => self.skipped.push(e),
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e));
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        None
    }
}

fn field_err(line: usize, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

struct Fields<'a> {
    map: &'a Map<String, Value>,
    prefix: String,
    line: usize,
}

impl<'a> Fields<'a> {
    fn new(value: &'a Value, prefix: &str, line: usize, allowed: &[&str]) -> Result<Self> {
        let name = if prefix.is_empty() {
            "<record>"
        } else {
            prefix
        };
        let map = value
            .as_object()
            .ok_or_else(|| field_err(line, name, "expected a JSON object"))?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(field_err(line, format!("{prefix}{k}"), "unknown field"));
        }
        Ok(Fields {
            map,
            prefix: prefix.to_string(),
            line,
        })
    }

    fn name(&self, key: &str) -> String {
        format!("{}{key}", self.prefix)
    }

    fn get(&self, key: &str) -> Result<&'a Value> {
        self.map
            .get(key)
            .ok_or_else(|| field_err(self.line, self.name(key), "missing field"))
    }

    fn real(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| field_err(self.line, self.name(key), "expected a number"))
    }

    fn unsigned(&self, key: &str, max: u64) -> Result<u64> {
        let v = self.get(key)?;
        let n = v.as_u64().ok_or_else(|| {
            field_err(
                self.line,
                self.name(key),
                format!("expected an unsigned integer, found {v}"),
            )
        })?;
        if n > max {
            return Err(field_err(
                self.line,
                self.name(key),
                format!("{n} exceeds {max}"),
            ));
        }
        Ok(n)
    }
}

/// Parses one NDJSON line; `line` is used for error positions.
pub fn parse_record_line(text: &str, line: usize) -> Result<EpochRecord> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| field_err(line, "<line>", format!("malformed JSON: {e}")))?;
    let rec = Fields::new(&value, "", line, &["sat", "t", "ch"])?;

    let sat = rec.unsigned("sat", u8::MAX as u64)?;
    let sat = SatId::new(sat as u8).map_err(|e| field_err(line, "sat", e.to_string()))?;
    let t = rec.real("t")?;
    let time = EpochTime::from_secs(t).map_err(|e| field_err(line, "t", e.to_string()))?;

    let ch = rec
        .get("ch")?
        .as_array()
        .ok_or_else(|| field_err(line, "ch", "expected an array"))?;
    if ch.len() > CHANNELS_PER_EPOCH {
        return Err(field_err(
            line,
            "ch",
            format!(
                "{} channels; at most {CHANNELS_PER_EPOCH} reflections per satellite-epoch",
                ch.len()
            ),
        ));
    }
    let mut channels = Vec::with_capacity(ch.len());
    for (i, c) in ch.iter().enumerate() {
        let prefix = format!("ch[{i}].");
        let f = Fields::new(c, &prefix, line, &["prn", "lat", "lon", "nf", "qf"])?;
        let prn = f.unsigned("prn", u8::MAX as u64)? as u8;
        let lat = f.real("lat")?;
        let lon = f.real("lon")?;
        let nf = f.real("nf")?;
        let qf = f.unsigned("qf", u32::MAX as u64)? as u32;
        let obs = ChannelObservation::new(prn, lat, lon, nf, qf).map_err(|e| {
            let field = match () {
                _ if prn == 0 => "prn",
                _ if !(-90.0..=90.0).contains(&lat) => "lat",
                _ if !lon.is_finite() => "lon",
                _ => "nf",
            };
            field_err(line, format!("{prefix}{field}"), e.to_string())
        })?;
        channels.push(obs);
    }
    EpochRecord::new(sat, time, channels).map_err(|e| field_err(line, "ch", e.to_string()))
}

#[derive(Serialize)]
struct RecordWire {
    sat: u8,
    t: f64,
    ch: Vec<ChannelWire>,
}

#[derive(Serialize)]
struct ChannelWire {
    prn: u8,
    lat: f64,
    lon: f64,
    nf: f64,
    qf: u32,
}

/// Canonical NDJSON line for one record, without the trailing newline.
pub fn record_to_line(record: &EpochRecord) -> String {
    let wire = RecordWire {
        sat: record.sat_id().get(),
        t: record.epoch_time().as_secs(),
        ch: record
            .channels()
            .iter()
            .map(|c| ChannelWire {
                prn: c.prn(),
                lat: c.sp_lat(),
                lon: c.sp_lon(),
                nf: c.noise_floor_counts(),
                qf: c.quality_flags(),
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("record serialization cannot fail")
}

/// Writes records in the order given.
pub fn write_records<'a, W, I>(mut out: W, records: I) -> Result<W>
where
    W: Write,
    I: IntoIterator<Item = &'a EpochRecord>,
{
    for r in records {
        out.write_all(record_to_line(r).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(out)
}

pub const TRUTH_CSV_HEADER: &str = "epoch_time,sat,jammed";

pub fn write_truth_csv<'a, W, I>(mut out: W, labels: I) -> Result<W>
where
    W: Write,
    I: IntoIterator<Item = &'a TruthLabel>,
{
    writeln!(out, "{TRUTH_CSV_HEADER}")?;
    for l in labels {
        writeln!(out, "{},{},{}", l.epoch_time, l.sat_id, u8::from(l.jammed))?;
    }
    out.flush()?;
    Ok(out)
}

pub fn read_truth_csv<R: BufRead>(input: R) -> Result<Vec<TruthLabel>> {
    let mut labels = Vec::new();
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, header)) => {
            let header = header?;
            if header.trim_end() != TRUTH_CSV_HEADER {
                let column = header
                    .split(',')
                    .zip(TRUTH_CSV_HEADER.split(','))
                    .find(|(a, b)| a != b)
                    .map(|(a, _)| a.to_string())
                    .unwrap_or_else(|| header.clone());
                return Err(Error::Schema {
                    column,
                    message: format!("expected header `{TRUTH_CSV_HEADER}`"),
                });
            }
        }
        None => {
            return Err(Error::Schema {
                column: "epoch_time".into(),
                message: "missing header line".into(),
            })
        }
    }
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 3 {
            return Err(field_err(
                line_no,
                "<row>",
                format!("expected 3 fields, found {}", f.len()),
            ));
        }
        let secs: f64 = f[0]
            .parse()
            .map_err(|e| field_err(line_no, "epoch_time", format!("{e}")))?;
        let epoch_time = EpochTime::from_secs(secs)
            .map_err(|e| field_err(line_no, "epoch_time", e.to_string()))?;
        let sat_id = f[1]
            .parse::<u8>()
            .map_err(|e| e.to_string())
            .and_then(|id| SatId::new(id).map_err(|e| e.to_string()))
            .map_err(|e| field_err(line_no, "sat", e))?;
        let jammed = match f[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(field_err(
                    line_no,
                    "jammed",
                    format!("expected 0 or 1, found {other:?}"),
                ))
            }
        };
        labels.push(TruthLabel {
            sat_id,
            epoch_time,
            jammed,
        });
    }
    Ok(labels)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    #[allow(dead_code)]
    name: Option<String>,
    preset: Option<String>,
    lat_min: Option<f64>,
    lat_max: Option<f64>,
    lon_min: Option<f64>,
    lon_max: Option<f64>,
}

pub fn parse_region_toml(text: &str) -> Result<Region> {
    let file: RegionFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("region file: {e}")))?;
    let bounds = (file.lat_min, file.lat_max, file.lon_min, file.lon_max);
    match (file.preset, bounds) {
        (Some(p), (None, None, None, None)) => {
            Region::preset(&p).ok_or_else(|| Error::Config(format!("unknown region preset {p:?}")))
        }
        (Some(_), _) => Err(Error::Config(
            "region file sets both a preset and explicit bounds".into(),
        )),
        (None, (Some(a), Some(b), Some(c), Some(d))) => Region::new(a, b, c, d),
        (None, _) => Err(Error::Config(
            "region file needs lat_min, lat_max, lon_min and lon_max".into(),
        )),
    }
}

pub fn load_region(path: &Path) -> Result<Region> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read region file {}: {e}", path.display())))?;
    parse_region_toml(&text)
}

/// Resolves a region given as a preset name, `lat_min,lat_max,lon_min,lon_max`,
/// or a path to a region TOML file.
pub fn resolve_region(arg: &str) -> Result<Region> {
    if let Some(r) = Region::preset(arg) {
        return Ok(r);
    }
    let parts: Vec<&str> = arg.split(',').collect();
    if parts.len() == 4 {
        let mut v = [0.0; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("region bound {p:?}: {e}")))?;
        }
        return Region::new(v[0], v[1], v[2], v[3]);
    }
    load_region(Path::new(arg))
}
