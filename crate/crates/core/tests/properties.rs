use ddm_rfi::ddm::{DdmGrid, GridShape};
use ddm_rfi::detect::{run_partitioned, run_stream, DetectorConfig, FlagRecord, Method};
use ddm_rfi::evaluate::{daily_counts, hourly_mean_max, summary, CountUnit};
use ddm_rfi::ingest::{parse_record_line, parse_records, record_to_line, write_records};
use ddm_rfi::testing::{flags_match, random_stream, reference_flags, StreamParams};
use ddm_rfi::units::to_db;
use ddm_rfi::{ChannelObservation, EpochRecord, EpochTime, ParseMode, Region, SatId};
use proptest::prelude::*;

fn detect(config: &DetectorConfig, records: &[EpochRecord]) -> Vec<FlagRecord> {
    run_stream(config.clone(), records.iter().cloned())
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn count(flags: &[FlagRecord], m: Method) -> usize {
    flags.iter().filter(|f| f.flag(m)).count()
}

proptest! {
    #[test]
    fn to_db_is_logarithmic(a in 1e-3f64..1e9, b in 1e-3f64..1e9) {
        let sum = to_db(a).unwrap() + to_db(b).unwrap();
        prop_assert!((to_db(a * b).unwrap() - sum).abs() < 1e-9);
        if a < b {
            prop_assert!(to_db(a).unwrap() < to_db(b).unwrap());
        }
    }

    #[test]
    fn region_ignores_full_turns(lat in -90.0f64..90.0, lon in -180.0f64..180.0, k in -5i32..5) {
        let r = Region::white_sands();
        prop_assert_eq!(r.contains(lat, lon), r.contains(lat, lon + 360.0 * k as f64));
    }

    #[test]
    fn noise_floor_ignores_non_forbidden_bins(
        values in proptest::collection::vec(0.0f64..1e6, 17 * 11),
        fuzz in proptest::collection::vec(0.0f64..1e6, 17 * 11),
    ) {
        let shape = GridShape::default();
        let g = DdmGrid::new(shape, values.clone()).unwrap();
        let cut = shape.specular_delay_index * shape.n_doppler;
        let mut perturbed = values;
        perturbed[cut..].copy_from_slice(&fuzz[cut..]);
        let h = DdmGrid::new(shape, perturbed).unwrap();
        prop_assert_eq!(g.noise_floor().to_bits(), h.noise_floor().to_bits());
    }

    #[test]
    fn jammer_is_additive_and_monotone(
        base in 1.0f64..1e4, c1 in 0.0f64..1e4, c2 in 1e-3f64..1e4, col in 0usize..11,
    ) {
        let g = DdmGrid::filled(GridShape::default(), base).unwrap();
        let two = g.inject_jammer(col, c1).unwrap().inject_jammer(col, c2).unwrap();
        let one = g.inject_jammer(col, c1 + c2).unwrap();
        for (a, b) in two.as_slice().iter().zip(one.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs());
        }
        let lo = g.inject_jammer(col, c1).unwrap().noise_floor();
        let hi = g.inject_jammer(col, c1 + c2).unwrap().noise_floor();
        prop_assert!(hi > lo);
    }

    #[test]
    fn channel_order_does_not_matter(seed in any::<u64>(), threshold in 39.0f64..43.0) {
        let p = StreamParams { bins: 120, sats: 3, ..StreamParams::default() };
        let records = random_stream(seed, &p);
        let shuffled: Vec<EpochRecord> = records
            .iter()
            .map(|r| {
                let mut ch = r.channels().to_vec();
                ch.reverse();
                if ch.len() > 1 { ch.swap(0, 1); }
                EpochRecord::new(r.sat_id(), r.epoch_time(), ch).unwrap()
            })
            .collect();
        let c = DetectorConfig::new(Region::white_sands()).with_threshold(threshold);
        prop_assert_eq!(detect(&c, &records), detect(&c, &shuffled));
    }

    #[test]
    fn detector_invariants(seed in any::<u64>(), threshold in 39.0f64..43.0) {
        let p = StreamParams { bins: 300, sats: 5, ..StreamParams::default() };
        let records = random_stream(seed, &p);
        let c = DetectorConfig::new(Region::white_sands()).with_threshold(threshold);
        let flags = detect(&c, &records);
        for f in &flags {
            prop_assert!(!f.mean_flag || f.raw_max);
            prop_assert!(!f.proposed || f.raw_max);
            prop_assert_eq!(f.cause == ddm_rfi::Cause::None, !f.proposed);
            if let (Some(mean), Some(max)) = (f.mean_db, f.max_db) {
                prop_assert!(mean <= max);
            }
        }
        let lower = detect(&c.clone().with_threshold(threshold - 0.7), &records);
        for (hi, lo) in flags.iter().zip(&lower) {
            for m in [Method::RawMax, Method::Mean, Method::Proposed] {
                prop_assert!(!hi.flag(m) || lo.flag(m));
            }
            prop_assert_eq!(hi.kurtosis_flag, lo.kurtosis_flag);
        }
        prop_assert!(count(&flags, Method::Mean) <= count(&flags, Method::RawMax));
        prop_assert!(count(&flags, Method::Proposed) <= count(&flags, Method::RawMax));

        let reference = reference_flags(&c, &records);
        prop_assert_eq!(reference.len(), flags.len());
        for (a, b) in flags.iter().zip(&reference) {
            prop_assert!(flags_match(a, b, 1e-12), "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn partitions_do_not_change_output(seed in any::<u64>(), parts in 1usize..9) {
        let p = StreamParams { bins: 400, sats: 4, ..StreamParams::default() };
        let records = random_stream(seed, &p);
        let c = DetectorConfig::new(Region::white_sands());
        prop_assert_eq!(run_partitioned(&c, &records, parts).unwrap(), detect(&c, &records));
    }

    #[test]
    fn evaluation_invariants(seed in any::<u64>()) {
        let p = StreamParams { bins: 200, sats: 4, ..StreamParams::default() };
        let records: Vec<EpochRecord> = random_stream(seed, &p)
            .into_iter()
            .map(|r| {
                let t = EpochTime::from_ticks(r.epoch_time().ticks() * 97 + 3_492_115_200);
                EpochRecord::new(r.sat_id(), t, r.channels().to_vec()).unwrap()
            })
            .collect();
        let flags = detect(&DetectorConfig::new(Region::white_sands()), &records);
        let daily = daily_counts(&flags).unwrap();
        for c in summary(&flags) {
            prop_assert!(c.flagged <= c.total);
            let sum: u64 = daily.iter().filter(|d| d.method == c.method && d.unit == c.unit).map(|d| d.count).sum();
            prop_assert_eq!(sum, c.flagged);
        }
        let sat_epoch = |m| summary(&flags).into_iter().find(|c| c.method == m && c.unit == CountUnit::SatEpoch).unwrap().flagged;
        prop_assert!(sat_epoch(Method::Mean) <= sat_epoch(Method::RawMax));
        for row in hourly_mean_max(&records).unwrap() {
            prop_assert!(row.max_db >= row.mean_db);
        }
    }

    #[test]
    fn ndjson_round_trip(seed in any::<u64>()) {
        let records = random_stream(seed, &StreamParams { bins: 30, sats: 8, ..StreamParams::default() });
        let bytes = write_records(Vec::new(), &records).unwrap();
        let back: Vec<EpochRecord> = parse_records(&bytes[..], ParseMode::Strict).collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(&back, &records);
        let again = write_records(Vec::new(), &back).unwrap();
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn canonicalization_is_idempotent(
        sat in 1u8..=8, t in -1e9f64..4e9, lat in -90.0f64..=90.0, lon in -720.0f64..720.0,
        nf in 0.0f64..1e7, qf in any::<u32>(), prn in 1u8..=255,
    ) {
        let text = format!(r#"{{"t":{t},"sat":{sat},"ch":[{{"qf":{qf},"nf":{nf},"lon":{lon},"lat":{lat},"prn":{prn}}}]}}"#);
        let once = record_to_line(&parse_record_line(&text, 1).unwrap());
        let twice = record_to_line(&parse_record_line(&once, 1).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,200}") {
        if let Err(e) = parse_record_line(&text, 5) {
            let positioned = matches!(e, ddm_rfi::Error::Parse { line: 5, .. });
            prop_assert!(positioned);
        }
    }

    #[test]
    fn parser_survives_mutated_records(cut in 0usize..90, byte in any::<u8>()) {
        let mut bytes = br#"{"sat":3,"t":1746057600.0,"ch":[{"prn":12,"lat":33.1,"lon":253.2,"nf":12589.3,"qf":0}]}"#.to_vec();
        let i = cut.min(bytes.len() - 1);
        bytes[i] = byte;
        for item in parse_records(&bytes[..], ParseMode::Lenient) {
            if let Err(e) = item {
                let positioned = matches!(e, ddm_rfi::Error::Parse { line: 1, .. });
                prop_assert!(positioned);
            }
        }
    }
}

#[test]
fn sat_id_nine_is_refused() {
    assert!(SatId::new(9).is_err());
    assert!(ChannelObservation::new(1, 0.0, 0.0, 1.0, 0).is_ok());
}
