//! Flag table CSV.
//!
//! ```text
//! epoch_time,sat,max_db,mean_db,raw_max,mean_flag,kurtosis_flag,simul,persist,proposed,cause
//! 1746057600.5,3,47.412,39.603,1,0,0,0,1,1,persistent
//! ```
//!
//! Booleans are `0`/`1`, levels carry three decimals and are left empty when
//! the record had no valid channel. Lines starting with `#` are comments.
//! Tables hold in-region satellite-epochs only, so rows read back are marked
//! `in_region`.

use std::io::{BufRead, Write};

use super::{Cause, FlagRecord};
use crate::error::{Error, Result};
use crate::observation::{EpochTime, SatId};

pub const FLAG_CSV_FORMAT_VERSION: u32 = 1;

pub const FLAG_CSV_HEADER: &str =
    "epoch_time,sat,max_db,mean_db,raw_max,mean_flag,kurtosis_flag,simul,persist,proposed,cause";

const COLUMNS: [&str; 11] = [
    "epoch_time",
    "sat",
    "max_db",
    "mean_db",
    "raw_max",
    "mean_flag",
    "kurtosis_flag",
    "simul",
    "persist",
    "proposed",
    "cause",
];

pub struct FlagCsvWriter<W: Write> {
    out: W,
    header_written: bool,
}

impl<W: Write> FlagCsvWriter<W> {
    pub fn new(out: W) -> Self {
        FlagCsvWriter {
            out,
            header_written: false,
        }
    }

    /// Writes a `# ` comment line; only valid before the first row.
    pub fn comment(&mut self, text: &str) -> Result<()> {
        if self.header_written {
            return Err(Error::Argument("comments must precede the header".into()));
        }
        writeln!(self.out, "# {text}")?;
        Ok(())
    }

    pub fn header(&mut self) -> Result<()> {
        if !self.header_written {
            writeln!(self.out, "{FLAG_CSV_HEADER}")?;
            self.header_written = true;
        }
        Ok(())
    }

    pub fn write(&mut self, f: &FlagRecord) -> Result<()> {
        self.header()?;
        let b = |v: bool| if v { '1' } else { '0' };
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            f.epoch_time,
            f.sat_id,
            fmt_db(f.max_db),
            fmt_db(f.mean_db),
            b(f.raw_max),
            b(f.mean_flag),
            b(f.kurtosis_flag),
            b(f.simul),
            b(f.persist),
            b(f.proposed),
            f.cause
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.header()?;
        self.out.flush()?;
        Ok(self.out)
    }
}

fn fmt_db(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

pub fn write_flag_csv<'a, W, I>(out: W, flags: I) -> Result<W>
where
    W: Write,
    I: IntoIterator<Item = &'a FlagRecord>,
{
    let mut w = FlagCsvWriter::new(out);
    for f in flags {
        w.write(f)?;
    }
    w.finish()
}

pub fn read_flag_csv<R: BufRead>(input: R) -> Result<Vec<FlagRecord>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.starts_with('#') || (line.trim().is_empty() && !header_seen) {
            continue;
        }
        if !header_seen {
            check_header(&line)?;
            header_seen = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row(&line, line_no)?);
    }
    if !header_seen {
        return Err(Error::Schema {
            column: COLUMNS[0].into(),
            message: "missing header line".into(),
        });
    }
    Ok(rows)
}

fn check_header(line: &str) -> Result<()> {
    let found: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
    for (i, expected) in COLUMNS.iter().enumerate() {
        match found.get(i) {
            Some(name) if name == expected => {}
            Some(name) => {
                return Err(Error::Schema {
                    column: (*name).to_string(),
                    message: format!("expected `{expected}` at position {}", i + 1),
                })
            }
            None => {
                return Err(Error::Schema {
                    column: (*expected).to_string(),
                    message: "column missing".into(),
                })
            }
        }
    }
    if let Some(extra) = found.get(COLUMNS.len()) {
        return Err(Error::Schema {
            column: (*extra).to_string(),
            message: "unexpected extra column".into(),
        });
    }
    Ok(())
}

fn parse_row(line: &str, line_no: usize) -> Result<FlagRecord> {
    let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
    if fields.len() != COLUMNS.len() {
        let column = COLUMNS.get(fields.len()).unwrap_or(&"cause");
        return Err(Error::Schema {
            column: (*column).to_string(),
            message: format!(
                "line {line_no}: expected {} fields, found {}",
                COLUMNS.len(),
                fields.len()
            ),
        });
    }
    let bad = |col: usize, why: String| Error::Schema {
        column: COLUMNS[col].to_string(),
        message: format!("line {line_no}: {why}"),
    };
    let boolean = |col: usize| match fields[col] {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(bad(col, format!("expected 0 or 1, found {other:?}"))),
    };
    let level = |col: usize| -> Result<Option<f64>> {
        if fields[col].is_empty() {
            return Ok(None);
        }
        fields[col]
            .parse::<f64>()
            .map(Some)
            .map_err(|e| bad(col, format!("{:?}: {e}", fields[col])))
    };
    let secs: f64 = fields[0]
        .parse()
        .map_err(|e| bad(0, format!("{:?}: {e}", fields[0])))?;
    let epoch_time = EpochTime::from_secs(secs).map_err(|e| bad(0, e.to_string()))?;
    let sat_id = fields[1]
        .parse::<u8>()
        .map_err(|e| bad(1, format!("{:?}: {e}", fields[1])))
        .and_then(|id| SatId::new(id).map_err(|e| bad(1, e.to_string())))?;
    let cause: Cause = fields[10]
        .parse()
        .map_err(|e: Error| bad(10, e.to_string()))?;
    Ok(FlagRecord {
        sat_id,
        epoch_time,
        in_region: true,
        max_db: level(2)?,
        mean_db: level(3)?,
        raw_max: boolean(4)?,
        mean_flag: boolean(5)?,
        kurtosis_flag: boolean(6)?,
        simul: boolean(7)?,
        persist: boolean(8)?,
        proposed: boolean(9)?,
        cause,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FlagRecord {
        FlagRecord {
            sat_id: SatId::new(3).unwrap(),
            epoch_time: EpochTime::from_ticks(3_492_115_201),
            in_region: true,
            max_db: Some(47.41234),
            mean_db: Some(39.6),
            raw_max: true,
            mean_flag: false,
            kurtosis_flag: false,
            simul: false,
            persist: true,
            proposed: true,
            cause: Cause::Persistent,
        }
    }

    #[test]
    fn writes_fixed_layout() {
        let empty = FlagRecord {
            max_db: None,
            mean_db: None,
            raw_max: false,
            persist: false,
            proposed: false,
            cause: Cause::None,
            ..sample()
        };
        let mut w = FlagCsvWriter::new(Vec::new());
        w.comment("threshold_db=41.0").unwrap();
        w.write(&sample()).unwrap();
        w.write(&empty).unwrap();
        assert!(w.comment("late").is_err());
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(
            text,
            "# threshold_db=41.0\n\
             epoch_time,sat,max_db,mean_db,raw_max,mean_flag,kurtosis_flag,simul,persist,proposed,cause\n\
             1746057600.5,3,47.412,39.600,1,0,0,0,1,1,persistent\n\
             1746057600.5,3,,,0,0,0,0,0,0,none\n"
        );
        let back = read_flag_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].max_db, Some(47.412));
        assert_eq!(back[1].max_db, None);
        assert_eq!(back[0].cause, Cause::Persistent);
    }

    #[test]
    fn header_only_when_empty() {
        let out = write_flag_csv(Vec::new(), &[]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            format!("{FLAG_CSV_HEADER}\n")
        );
    }

    #[test]
    fn schema_errors_name_the_column() {
        let renamed = FLAG_CSV_HEADER.replace("mean_flag", "avg_flag");
        match read_flag_csv(renamed.as_bytes()).unwrap_err() {
            Error::Schema { column, .. } => assert_eq!(column, "avg_flag"),
            e => panic!("{e}"),
        }
        let short = "epoch_time,sat,max_db\n";
        match read_flag_csv(short.as_bytes()).unwrap_err() {
            Error::Schema { column, .. } => assert_eq!(column, "mean_db"),
            e => panic!("{e}"),
        }
        let bad_bool = format!("{FLAG_CSV_HEADER}\n1.0,1,40.000,39.000,2,0,0,0,0,0,none\n");
        match read_flag_csv(bad_bool.as_bytes()).unwrap_err() {
            Error::Schema { column, message } => {
                assert_eq!(column, "raw_max");
                assert!(message.contains("line 2"));
            }
            e => panic!("{e}"),
        }
        assert!(read_flag_csv("".as_bytes()).is_err());
    }
}
