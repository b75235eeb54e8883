use std::cell::RefCell;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::rc::Rc;

use clap::ValueEnum;
use ddm_rfi::ddm::{synth_normal, DdmGrid, GridShape, NoiseModel, SynthParams};
use ddm_rfi::detect::{
    read_flag_csv, run_partitioned, run_stream, FlagCsvWriter, FlagRecord, FLAG_CSV_FORMAT_VERSION,
};
use ddm_rfi::evaluate::{
    daily_counts, daily_csv, hourly_csv, hourly_from_flags, score_against_truth, score_csv,
    summary, summary_csv, summary_table,
};
use ddm_rfi::geometry::HALF_POWER_DB;
use ddm_rfi::ingest::{
    parse_records, read_truth_csv, resolve_region, write_records, write_truth_csv, RecordReader,
};
use ddm_rfi::scenario::golden_fixture;
use ddm_rfi::units::to_db;
use ddm_rfi::{DetectorConfig, EpochRecord, Error, OverpassGeometry, ParseMode, Result, Scenario};

use crate::{DdmCommand, DetectArgs, EvaluateArgs, GeomArgs, GoldenArgs, MethodArg, SimulateArgs};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let out = scenario.generate(a.seed)?;
    write_records(create(&a.out_records)?, &out.records)?;
    write_truth_csv(create(&a.out_truth)?, &out.truth)?;
    Ok(())
}

/// Record source that remembers the input line of every record handed out
/// and parks the first parse error instead of yielding it.
struct Tracked<R> {
    reader: RecordReader<R>,
    lines: Rc<RefCell<Vec<usize>>>,
    error: Rc<RefCell<Option<Error>>>,
    reported: usize,
}

impl<R: BufRead> Iterator for Tracked<R> {
    type Item = EpochRecord;

    fn next(&mut self) -> Option<EpochRecord> {
        let item = self.reader.next();
        let skipped = self.reader.skipped();
        report_skipped(&skipped[self.reported..]);
        self.reported = skipped.len();
        match item? {
            Ok(r) => {
                self.lines.borrow_mut().push(self.reader.line());
                Some(r)
            }
            Err(e) => {
                *self.error.borrow_mut() = Some(e);
                None
            }
        }
    }
}

fn at_line(err: Error, lines: &[usize]) -> Error {
    match err {
        Error::AtRecord { record, source } => match lines.get(record.wrapping_sub(1)) {
            Some(&line) => Error::AtLine { line, source },
            None => Error::AtRecord { record, source },
        },
        other => other,
    }
}

fn keep(method: MethodArg, f: &FlagRecord) -> bool {
    f.in_region
        && match method {
            MethodArg::All => true,
            MethodArg::Kurtosis => f.kurtosis_flag,
            MethodArg::Mean => f.mean_flag,
            MethodArg::Proposed => f.proposed,
        }
}

fn report_skipped(skipped: &[Error]) {
    for e in skipped {
        eprintln!("ddm-rfi: skipped {e}");
    }
}

pub fn detect(a: &DetectArgs) -> Result<()> {
    let region = resolve_region(&a.region)?;
    let config = DetectorConfig::new(region)
        .with_threshold(a.threshold)
        .with_window(a.window);
    config.validate()?;
    let input: Box<dyn BufRead> = if a.records == "-" {
        Box::new(io::stdin().lock())
    } else {
        Box::new(open(Path::new(&a.records))?)
    };
    let mode = if a.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };

    let mut w = FlagCsvWriter::new(output(a.output.as_deref())?);
    w.comment(&format!(
        "ddm-rfi {} flag table format {FLAG_CSV_FORMAT_VERSION}",
        ddm_rfi::VERSION
    ))?;
    w.comment(&format!(
        "threshold_db={:?} window_s={:?} region={} method={}",
        config.threshold_db,
        config.persistence_window_s,
        config.region,
        a.method
            .to_possible_value()
            .expect("no skipped variants")
            .get_name()
    ))?;
    w.header()?;

    if a.sort || a.partitions > 1 {
        let mut reader = parse_records(input, mode);
        let mut records: Vec<EpochRecord> = reader.by_ref().collect::<Result<_>>()?;
        report_skipped(reader.skipped());
        if a.sort {
            records.sort_by_key(EpochRecord::key);
        }
        let flags = if a.partitions > 1 {
            run_partitioned(&config, &records, a.partitions as usize)?
        } else {
            run_stream(config, records)?.collect::<Result<_>>()?
        };
        for f in flags.iter().filter(|f| keep(a.method, f)) {
            w.write(f)?;
        }
    } else {
        let lines = Rc::new(RefCell::new(Vec::new()));
        let error = Rc::new(RefCell::new(None));
        let source = Tracked {
            reader: parse_records(input, mode),
            lines: Rc::clone(&lines),
            error: Rc::clone(&error),
            reported: 0,
        };
        for f in run_stream(config, source)? {
            let f = f.map_err(|e| at_line(e, &lines.borrow()))?;
            if keep(a.method, &f) {
                w.write(&f)?;
            }
        }
        let parked = error.borrow_mut().take();
        if let Some(e) = parked {
            return Err(e);
        }
    }
    w.finish()?.flush()?;
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let flags = read_flag_csv(open(&a.flags)?)?;
    let truth = match &a.truth {
        Some(p) => Some(read_truth_csv(open(p)?)?),
        None => None,
    };
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let counts = summary(&flags);
    write_file(
        &a.out_dir.join("daily.csv"),
        daily_csv(&daily_counts(&flags)?).as_bytes(),
    )?;
    write_file(
        &a.out_dir.join("summary.csv"),
        summary_csv(&counts).as_bytes(),
    )?;
    write_file(
        &a.out_dir.join("hourly.csv"),
        hourly_csv(&hourly_from_flags(&flags)?).as_bytes(),
    )?;
    if let Some(truth) = truth {
        let scores = score_against_truth(&flags, &truth)?;
        write_file(&a.out_dir.join("score.csv"), score_csv(&scores).as_bytes())?;
    }
    print!("{}", summary_table(&counts));
    Ok(())
}

pub fn geom(a: &GeomArgs) -> Result<()> {
    let g = OverpassGeometry::new(a.altitude, a.speed)?;
    if !(a.range.is_finite() && a.range >= 0.0) {
        return Err(Error::Argument(format!("range {} must be >= 0", a.range)));
    }
    if !(a.step.is_finite() && a.step > 0.0) {
        return Err(Error::Argument(format!("step {} must be > 0", a.step)));
    }
    if !(a.window.is_finite() && a.window > 0.0) {
        return Err(Error::Argument(format!("window {} must be > 0", a.window)));
    }
    let half = g.range_for_loss(HALF_POWER_DB)?;
    let three = g.range_for_loss(3.0)?;
    let slant = g.slant_range(a.window);
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(
        out,
        "# headline dt_s={} slant_km={:.1} fspl_delta_db={:.4} slant_increase_pct={:.3} \
         half_power_slant_km={:.1} half_power_horizontal_km={:.1} half_power_transit_s={:.1} \
         detectable_window_s={:.1} persistence_margin={:.2}",
        a.window,
        slant,
        g.fspl_delta_db(a.window),
        100.0 * (slant / a.altitude - 1.0),
        half.slant_km,
        half.horizontal_km,
        half.transit_s,
        half.detectable_window_s(),
        g.persistence_margin(a.window, HALF_POWER_DB)?,
    )?;
    writeln!(
        out,
        "# loss_3db slant_km={:.1} horizontal_km={:.1} transit_s={:.1}",
        three.slant_km, three.horizontal_km, three.transit_s
    )?;
    writeln!(out, "dt_s,slant_km,fspl_delta_db")?;
    let n = (a.range / a.step + 1e-9).floor() as u64;
    for i in 0..=n {
        let dt = i as f64 * a.step;
        writeln!(
            out,
            "{dt},{:.3},{:.4}",
            g.slant_range(dt),
            g.fspl_delta_db(dt)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn read_grid(path: &Path) -> Result<DdmGrid> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    DdmGrid::parse_text(&text)
}

pub fn ddm(c: &DdmCommand) -> Result<()> {
    match c {
        DdmCommand::Synth(a) => {
            let model = NoiseModel::new(a.gain, a.antenna_noise, a.receiver_noise)?;
            let params = SynthParams {
                peak_counts: a.peak,
                roughness: a.roughness,
                incoherent_looks: a.looks,
            };
            let grid = synth_normal(GridShape::default(), &model, params, a.seed)?;
            let mut out = output(a.output.as_deref())?;
            out.write_all(grid.to_text().as_bytes())?;
            out.flush()?;
        }
        DdmCommand::Floor { grid } => {
            let g = read_grid(grid)?;
            let floor = g.noise_floor();
            let db = to_db(floor).map(|d| format!("{d:.3}")).unwrap_or_default();
            println!("noise_floor_counts,noise_floor_db");
            println!("{floor},{db}");
        }
        DdmCommand::Jam {
            grid,
            doppler,
            counts,
            output: path,
        } => {
            let g = read_grid(grid)?.inject_jammer(*doppler, *counts)?;
            let mut out = output(path.as_deref())?;
            out.write_all(g.to_text().as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn golden(a: &GoldenArgs) -> Result<()> {
    for p in golden_fixture(a.seed, &a.out)? {
        println!("{}", p.display());
    }
    Ok(())
}
