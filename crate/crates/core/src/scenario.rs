//! Truth-labelled constellation and jammer simulator.
//!
//! Satellites fly straight ground tracks on an equirectangular plane. Every
//! 0.5 s each one records four channels whose specular points scatter around
//! the sub-satellite point. A channel's noise floor is the track baseline
//! plus Gaussian jitter in dB; active jammers add power linearly to the
//! channels they affect, attenuated by the extra free-space loss of the slant
//! path relative to closest approach.
//!
//! Scenario files are TOML:
//!
//! ```toml
//! origin = 1746057600.0        # Unix seconds of scenario time 0
//!
//! [[track]]
//! sat = 1
//! start_lat = 26.7
//! start_lon = 253.5
//! heading = 0.0                # degrees clockwise from north
//! start = 0.0                  # seconds from origin, multiples of 0.5
//! end = 180.0
//! # optional: speed = 7.0, altitude = 500.0, baseline_db = 37.0,
//! #           jitter_db = 0.8, spread_km = 20.0
//!
//! [[jammer]]
//! lat = 33.0
//! lon = 253.5
//! power_offset_db = 10.0
//! active = [[20.0, 171.0]]
//! channels = [1]               # or "all"
//! # optional: horizon_db = 3.0103, kurtosis_visible = false
//!
//! [[spike]]
//! sat = 4
//! t = 45.0
//! channel = 2
//! level_db = 48.0
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::DEFAULT_KURTOSIS_RFI_BIT;
use crate::error::{Error, Result};
use crate::geometry::{OverpassGeometry, HALF_POWER_DB};
use crate::ingest::{write_records, write_truth_csv};
use crate::observation::{ChannelObservation, EpochRecord, EpochTime, SatId};
use crate::units::{
    from_db, normalize_lon, CHANNELS_PER_EPOCH, GROUND_SPEED_KM_S, SAT_ALTITUDE_KM,
};

/// Kilometres per degree of latitude on a sphere of mean Earth radius.
pub const KM_PER_DEG: f64 = 111.195;

/// 2025-05-01T00:00:00Z.
pub const DEFAULT_ORIGIN_UNIX_S: f64 = 1_746_057_600.0;

/// Seed of the published acceptance fixture.
pub const GOLDEN_SEED: u64 = 20_250_501;

pub const DEFAULT_BASELINE_DB: f64 = 37.0;
pub const DEFAULT_JITTER_DB: f64 = 0.8;
pub const DEFAULT_SPREAD_KM: f64 = 20.0;

fn default_speed() -> f64 {
    GROUND_SPEED_KM_S
}
fn default_altitude() -> f64 {
    SAT_ALTITUDE_KM
}
fn default_baseline() -> f64 {
    DEFAULT_BASELINE_DB
}
fn default_jitter() -> f64 {
    DEFAULT_JITTER_DB
}
fn default_spread() -> f64 {
    DEFAULT_SPREAD_KM
}
fn default_horizon() -> f64 {
    HALF_POWER_DB
}
fn default_origin() -> f64 {
    DEFAULT_ORIGIN_UNIX_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub sat: SatId,
    pub start_lat: f64,
    pub start_lon: f64,
    /// Degrees clockwise from north.
    pub heading: f64,
    /// Ground-track speed, km/s.
    #[serde(default = "default_speed")]
    pub speed: f64,
    /// Orbit altitude, km.
    #[serde(default = "default_altitude")]
    pub altitude: f64,
    /// First epoch, seconds from the scenario origin.
    pub start: f64,
    /// Last epoch, inclusive.
    pub end: f64,
    #[serde(default = "default_baseline")]
    pub baseline_db: f64,
    /// Standard deviation of the per-channel baseline, dB.
    #[serde(default = "default_jitter")]
    pub jitter_db: f64,
    /// Radius around the sub-satellite point holding the specular points, km.
    #[serde(default = "default_spread")]
    pub spread_km: f64,
}

impl TrackSpec {
    /// A track with default speed, altitude, baseline and spread.
    pub fn new(
        sat: SatId,
        start_lat: f64,
        start_lon: f64,
        heading: f64,
        start: f64,
        end: f64,
    ) -> Self {
        TrackSpec {
            sat,
            start_lat,
            start_lon,
            heading,
            speed: GROUND_SPEED_KM_S,
            altitude: SAT_ALTITUDE_KM,
            start,
            end,
            baseline_db: DEFAULT_BASELINE_DB,
            jitter_db: DEFAULT_JITTER_DB,
            spread_km: DEFAULT_SPREAD_KM,
        }
    }

    /// Sub-satellite point at `elapsed` seconds after the track start.
    pub fn position(&self, elapsed: f64) -> (f64, f64) {
        let d = self.speed * elapsed;
        let h = self.heading.to_radians();
        offset(self.start_lat, self.start_lon, d * h.cos(), d * h.sin())
    }

    fn geometry(&self) -> Result<OverpassGeometry> {
        OverpassGeometry::new(self.altitude, self.speed)
    }

    fn epochs(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.end - self.start) * 2.0).round() as i64;
        (0..=n).map(move |i| self.start + i as f64 * 0.5)
    }
}

/// Moves `north_km`/`east_km` on the local equirectangular plane.
fn offset(lat: f64, lon: f64, north_km: f64, east_km: f64) -> (f64, f64) {
    let lat2 = lat + north_km / KM_PER_DEG;
    let lon2 = lon + east_km / (KM_PER_DEG * lat.to_radians().cos());
    (lat2, normalize_lon(lon2))
}

/// Horizontal distance on the equirectangular plane, km.
pub fn ground_distance_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let dlon = (lon1 - lon2 + 540.0).rem_euclid(360.0) - 180.0;
    let mid = (0.5 * (lat1 + lat2)).to_radians();
    let north = (lat1 - lat2) * KM_PER_DEG;
    let east = dlon * KM_PER_DEG * mid.cos();
    north.hypot(east)
}

/// Channels a jammer contaminates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ChannelsWire", into = "ChannelsWire")]
pub enum AffectedChannels {
    All,
    /// 1-based channel numbers.
    Subset(Vec<u8>),
}

impl AffectedChannels {
    pub fn contains(&self, channel: u8) -> bool {
        match self {
            AffectedChannels::All => true,
            AffectedChannels::Subset(s) => s.contains(&channel),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, AffectedChannels::Subset(s) if s.is_empty())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ChannelsWire {
    Name(String),
    List(Vec<u8>),
}

impl TryFrom<ChannelsWire> for AffectedChannels {
    type Error = String;

    fn try_from(w: ChannelsWire) -> std::result::Result<Self, String> {
        match w {
            ChannelsWire::Name(n) if n == "all" => Ok(AffectedChannels::All),
            ChannelsWire::Name(n) => {
                Err(format!("channels must be \"all\" or a list, found {n:?}"))
            }
            ChannelsWire::List(mut v) => {
                if let Some(bad) = v
                    .iter()
                    .find(|&&c| c == 0 || c as usize > CHANNELS_PER_EPOCH)
                {
                    return Err(format!("channel {bad} outside 1..={CHANNELS_PER_EPOCH}"));
                }
                v.sort_unstable();
                v.dedup();
                Ok(AffectedChannels::Subset(v))
            }
        }
    }
}

impl From<AffectedChannels> for ChannelsWire {
    fn from(c: AffectedChannels) -> Self {
        match c {
            AffectedChannels::All => ChannelsWire::Name("all".into()),
            AffectedChannels::Subset(v) => ChannelsWire::List(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerSpec {
    pub lat: f64,
    pub lon: f64,
    /// Level above the track baseline that a satellite directly overhead
    /// observes from the jammer alone, dB.
    pub power_offset_db: f64,
    /// Closed `[start, end]` activity intervals, seconds from the origin.
    pub active: Vec<[f64; 2]>,
    pub channels: AffectedChannels,
    /// Extra path loss bounding the truth-labelled footprint, dB.
    #[serde(default = "default_horizon")]
    pub horizon_db: f64,
    /// Sets the kurtosis RFI bit on channels where the jammer dominates.
    #[serde(default)]
    pub kurtosis_visible: bool,
}

impl JammerSpec {
    pub fn is_active(&self, t: f64) -> bool {
        self.active.iter().any(|&[a, b]| a <= t && t <= b)
    }
}

/// A single-channel receiver artifact: the channel reads `level_db` at one
/// epoch. Not interference, so its truth label stays false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeSpec {
    pub sat: SatId,
    pub t: f64,
    /// 1-based channel number.
    pub channel: u8,
    pub level_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_origin")]
    pub origin: f64,
    #[serde(default, rename = "track")]
    pub tracks: Vec<TrackSpec>,
    #[serde(default, rename = "jammer", skip_serializing_if = "Vec::is_empty")]
    pub jammers: Vec<JammerSpec>,
    #[serde(default, rename = "spike", skip_serializing_if = "Vec::is_empty")]
    pub spikes: Vec<SpikeSpec>,
}

/// Ground truth for one satellite-epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruthLabel {
    pub sat_id: SatId,
    pub epoch_time: EpochTime,
    pub jammed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub records: Vec<EpochRecord>,
    pub truth: Vec<TruthLabel>,
}

fn on_grid(t: f64) -> bool {
    t.is_finite() && (t * 2.0 - (t * 2.0).round()).abs() < 1e-9
}

fn cfg(msg: String) -> Error {
    Error::Config(msg)
}

impl Scenario {
    pub fn new(tracks: Vec<TrackSpec>, jammers: Vec<JammerSpec>, spikes: Vec<SpikeSpec>) -> Self {
        Scenario {
            origin: DEFAULT_ORIGIN_UNIX_S,
            tracks,
            jammers,
            spikes,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| cfg(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| cfg(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => cfg(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if !on_grid(self.origin) {
            return Err(cfg(format!(
                "origin {} is not a multiple of 0.5 s",
                self.origin
            )));
        }
        let mut seen = [false; 256];
        for t in &self.tracks {
            let s = t.sat.get() as usize;
            if seen[s] {
                return Err(cfg(format!("satellite {} has more than one track", t.sat)));
            }
            seen[s] = true;
            if !(on_grid(t.start) && on_grid(t.end) && t.end > t.start) {
                return Err(cfg(format!(
                    "track {}: start {} and end {} must be multiples of 0.5 s with end > start",
                    t.sat, t.start, t.end
                )));
            }
            t.geometry()
                .map_err(|e| cfg(format!("track {}: {e}", t.sat)))?;
            if !(-90.0..=90.0).contains(&t.start_lat)
                || !t.start_lon.is_finite()
                || !t.heading.is_finite()
            {
                return Err(cfg(format!(
                    "track {}: bad start position or heading",
                    t.sat
                )));
            }
            for (name, v) in [("jitter_db", t.jitter_db), ("spread_km", t.spread_km)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(cfg(format!(
                        "track {}: {name} must be finite and >= 0",
                        t.sat
                    )));
                }
            }
            if !t.baseline_db.is_finite() {
                return Err(cfg(format!("track {}: baseline_db must be finite", t.sat)));
            }
            let (end_lat, _) = t.position(t.end - t.start);
            if !(-90.0..=90.0).contains(&end_lat) {
                return Err(cfg(format!("track {} runs past a pole", t.sat)));
            }
        }
        for (i, j) in self.jammers.iter().enumerate() {
            let n = i + 1;
            if !(-90.0..=90.0).contains(&j.lat)
                || !j.lon.is_finite()
                || !j.power_offset_db.is_finite()
            {
                return Err(cfg(format!("jammer {n}: bad position or power")));
            }
            if !(j.horizon_db.is_finite() && j.horizon_db >= 0.0) {
                return Err(cfg(format!("jammer {n}: horizon_db must be >= 0")));
            }
            let mut spans = j.active.clone();
            spans.sort_by(|a, b| a[0].total_cmp(&b[0]));
            for [a, b] in &spans {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(cfg(format!(
                        "jammer {n}: interval [{a}, {b}] needs start < end"
                    )));
                }
            }
            if spans.windows(2).any(|w| w[1][0] <= w[0][1]) {
                return Err(cfg(format!("jammer {n}: activity intervals overlap")));
            }
        }
        for s in &self.spikes {
            let track =
                self.tracks.iter().find(|t| t.sat == s.sat).ok_or_else(|| {
                    cfg(format!("spike on satellite {} which has no track", s.sat))
                })?;
            if !(on_grid(s.t) && track.start <= s.t && s.t <= track.end) {
                return Err(cfg(format!(
                    "spike at {} s is not an epoch of satellite {}",
                    s.t, s.sat
                )));
            }
            if s.channel == 0 || s.channel as usize > CHANNELS_PER_EPOCH || !s.level_db.is_finite()
            {
                return Err(cfg(format!(
                    "spike on satellite {}: bad channel or level",
                    s.sat
                )));
            }
        }
        Ok(())
    }

    /// Simulates every track. Output is sorted by `(epoch_time, sat)`.
    pub fn generate(&self, seed: u64) -> Result<Generated> {
        self.validate()?;
        let per_track: Vec<Result<(Vec<EpochRecord>, Vec<TruthLabel>)>> = self
            .tracks
            .par_iter()
            .enumerate()
            .map(|(i, t)| self.generate_track(t, i as u64, seed))
            .collect();
        let mut records = Vec::new();
        let mut truth = Vec::new();
        for r in per_track {
            let (rec, tr) = r?;
            records.extend(rec);
            truth.extend(tr);
        }
        records.sort_by_key(|r| r.key());
        truth.sort_by_key(|l| (l.epoch_time, l.sat_id));
        Ok(Generated { records, truth })
    }

    fn generate_track(
        &self,
        track: &TrackSpec,
        stream: u64,
        seed: u64,
    ) -> Result<(Vec<EpochRecord>, Vec<TruthLabel>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let jitter = Normal::new(0.0, track.jitter_db)
            .map_err(|e| cfg(format!("track {}: {e}", track.sat)))?;
        let geom = track.geometry()?;
        let horizons: Vec<f64> = self
            .jammers
            .iter()
            .map(|j| geom.range_for_loss(j.horizon_db).map(|r| r.horizontal_km))
            .collect::<Result<_>>()?;
        let prns: [u8; CHANNELS_PER_EPOCH] =
            std::array::from_fn(|k| ((track.sat.get() as usize * 5 + k * 7) % 32 + 1) as u8);

        let mut records = Vec::new();
        let mut truth = Vec::new();
        for t in track.epochs() {
            let (lat, lon) = track.position(t - track.start);
            let epoch = EpochTime::from_secs(self.origin + t)?;

            // per-jammer linear power and footprint membership at this epoch
            let mut jammed = false;
            let mut contributions = Vec::with_capacity(self.jammers.len());
            for (j, horizon) in self.jammers.iter().zip(&horizons) {
                if !j.is_active(t) || j.channels.is_empty() {
                    continue;
                }
                let h = ground_distance_km(lat, lon, j.lat, j.lon);
                jammed |= h <= *horizon;
                let level = track.baseline_db + j.power_offset_db - geom.fspl_delta_db_at(h);
                contributions.push((j, level));
            }

            let mut channels = Vec::with_capacity(CHANNELS_PER_EPOCH);
            for (k, &prn) in prns.iter().enumerate() {
                let ch = k as u8 + 1;
                let level = track.baseline_db + jitter.sample(&mut rng);
                let r = track.spread_km * rng.random::<f64>().sqrt();
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                let (sp_lat, sp_lon) = offset(lat, lon, r * theta.cos(), r * theta.sin());

                let mut counts = from_db(level);
                let mut qf = 0u32;
                for (j, jl) in &contributions {
                    if j.channels.contains(ch) {
                        counts += from_db(*jl);
                        if j.kurtosis_visible && *jl >= level {
                            qf |= 1 << DEFAULT_KURTOSIS_RFI_BIT;
                        }
                    }
                }
                if let Some(s) = self
                    .spikes
                    .iter()
                    .find(|s| s.sat == track.sat && s.t == t && s.channel == ch)
                {
                    counts = from_db(s.level_db);
                }
                channels.push(ChannelObservation::new(
                    prn,
                    sp_lat.clamp(-90.0, 90.0),
                    sp_lon,
                    counts,
                    qf,
                )?);
            }
            records.push(EpochRecord::new(track.sat, epoch, channels)?);
            truth.push(TruthLabel {
                sat_id: track.sat,
                epoch_time: epoch,
                jammed,
            });
        }
        Ok((records, truth))
    }
}

/// One of the scripted acceptance scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldenCase {
    /// One satellite passes over a jammer that contaminates channel 1 only.
    PartialChannel,
    /// Two satellites catch a short all-channel burst in the same epochs.
    Concurrence,
    /// Two clean satellites; one records a single-epoch, single-channel spike.
    Spike,
}

impl GoldenCase {
    pub const ALL: [GoldenCase; 3] = [
        GoldenCase::PartialChannel,
        GoldenCase::Concurrence,
        GoldenCase::Spike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GoldenCase::PartialChannel => "partial_channel",
            GoldenCase::Concurrence => "concurrence",
            GoldenCase::Spike => "spike",
        }
    }

    pub fn scenario(self) -> Scenario {
        let sat = |n| SatId::new(n).expect("valid id");
        match self {
            GoldenCase::PartialChannel => Scenario::new(
                vec![TrackSpec::new(sat(1), 26.7, 253.5, 0.0, 0.0, 180.0)],
                vec![JammerSpec {
                    lat: 33.0,
                    lon: 253.5,
                    power_offset_db: 10.0,
                    active: vec![[20.0, 171.0]],
                    channels: AffectedChannels::Subset(vec![1]),
                    horizon_db: HALF_POWER_DB,
                    kurtosis_visible: false,
                }],
                vec![],
            ),
            GoldenCase::Concurrence => Scenario::new(
                vec![
                    TrackSpec::new(sat(2), 29.25, 249.5, 0.0, 0.0, 120.0),
                    TrackSpec::new(sat(3), 36.75, 250.5, 180.0, 0.0, 120.0),
                ],
                vec![JammerSpec {
                    lat: 33.0,
                    lon: 250.0,
                    power_offset_db: 15.0,
                    active: vec![[60.0, 61.0]],
                    channels: AffectedChannels::All,
                    horizon_db: HALF_POWER_DB,
                    kurtosis_visible: false,
                }],
                vec![],
            ),
            GoldenCase::Spike => Scenario::new(
                vec![
                    TrackSpec::new(sat(4), 30.0, 250.0, 45.0, 0.0, 90.0),
                    TrackSpec::new(sat(5), 35.0, 255.0, 270.0, 0.0, 90.0),
                ],
                vec![],
                vec![SpikeSpec {
                    sat: sat(4),
                    t: 45.0,
                    channel: 2,
                    level_db: 48.0,
                }],
            ),
        }
    }
}

impl fmt::Display for GoldenCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Writes `<name>.toml`, `<name>.records.ndjson` and `<name>.truth.csv` for
/// every golden case into `dir` and returns the paths written.
pub fn golden_fixture(seed: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for case in GoldenCase::ALL {
        let scenario = case.scenario();
        let out = scenario.generate(seed)?;
        let base = dir.join(case.name());
        let toml_path = base.with_extension("toml");
        fs::write(&toml_path, scenario.to_toml())?;
        let rec_path = dir.join(format!("{}.records.ndjson", case.name()));
        fs::write(&rec_path, write_records(Vec::new(), &out.records)?)?;
        let truth_path = dir.join(format!("{}.truth.csv", case.name()));
        fs::write(&truth_path, write_truth_csv(Vec::new(), &out.truth)?)?;
        written.extend([toml_path, rec_path, truth_path]);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{eval_max_flag, DetectorConfig};
    use crate::observation::Region;
    use crate::units::to_db;

    fn sat(n: u8) -> SatId {
        SatId::new(n).unwrap()
    }

    fn levels(r: &EpochRecord) -> Vec<f64> {
        r.channels()
            .iter()
            .map(|c| to_db(c.noise_floor_counts()).unwrap())
            .collect()
    }

    #[test]
    fn overhead_partial_contamination() {
        let mut track = TrackSpec::new(sat(1), 33.0, 253.5, 0.0, 0.0, 1.0);
        track.jitter_db = 0.0;
        track.spread_km = 0.0;
        let jammer = JammerSpec {
            lat: 33.0,
            lon: 253.5,
            power_offset_db: 10.0,
            active: vec![[0.0, 1.0]],
            channels: AffectedChannels::Subset(vec![1]),
            horizon_db: HALF_POWER_DB,
            kurtosis_visible: false,
        };
        let g = Scenario::new(vec![track], vec![jammer], vec![])
            .generate(1)
            .unwrap();
        let l = levels(&g.records[0]);
        // independent: 10^3.7 + 10^4.7 counts on channel 1
        let ch1 = 10.0 * (10f64.powf(3.7) + 10f64.powf(4.7)).log10();
        assert!((l[0] - ch1).abs() < 1e-9);
        assert!((ch1 - 47.0).abs() < 0.5);
        for v in &l[1..] {
            assert!((v - 37.0).abs() < 1e-9);
        }
        let mean = l.iter().sum::<f64>() / 4.0;
        assert!((mean - (ch1 + 3.0 * 37.0) / 4.0).abs() < 1e-9);
        assert!(mean < 41.0 && l[0] > 41.0);
        assert!(g.truth[0].jammed);
    }

    #[test]
    fn contribution_falls_3db_at_500km() {
        let geom = OverpassGeometry::default();
        let drop = geom.fspl_delta_db_at(500.0);
        assert!((drop - 3.0).abs() < 0.02, "{drop}");
        let mut prev = f64::INFINITY;
        for h in (0..3000).step_by(50) {
            let level = 47.0 - geom.fspl_delta_db_at(h as f64);
            assert!(level <= prev);
            prev = level;
        }
    }

    #[test]
    fn jammers_leave_other_channels_and_rng_untouched() {
        let track = TrackSpec::new(sat(2), 30.0, 250.0, 10.0, 0.0, 30.0);
        let jammer = JammerSpec {
            lat: 31.0,
            lon: 250.5,
            power_offset_db: 12.0,
            active: vec![[5.0, 25.0]],
            channels: AffectedChannels::Subset(vec![2, 3]),
            horizon_db: HALF_POWER_DB,
            kurtosis_visible: false,
        };
        let off = Scenario::new(vec![track.clone()], vec![], vec![])
            .generate(9)
            .unwrap();
        let on = Scenario::new(vec![track], vec![jammer], vec![])
            .generate(9)
            .unwrap();
        for (a, b) in off.records.iter().zip(&on.records) {
            for k in [0, 3] {
                assert_eq!(a.channels()[k], b.channels()[k]);
            }
            for k in [1, 2] {
                assert_eq!(a.channels()[k].sp_lat(), b.channels()[k].sp_lat());
            }
        }
        assert!(off.truth.iter().all(|l| !l.jammed));
        assert!(on.truth.iter().any(|l| l.jammed));
    }

    #[test]
    fn clean_max_of_four_tail_rate() {
        use statrs::distribution::{ContinuousCDF, Normal as StatNormal};
        let tracks: Vec<_> = (1..=8)
            .map(|s| TrackSpec::new(sat(s), 30.0 + s as f64 * 0.3, 250.0, 90.0, 0.0, 3200.0))
            .collect();
        let g = Scenario::new(tracks, vec![], vec![]).generate(77).unwrap();
        assert!(g.records.len() >= 50_000);
        let region = Region::new(-90.0, 90.0, 0.0, 359.999).unwrap();
        let threshold = 38.6;
        let c = DetectorConfig::new(region).with_threshold(threshold);
        let hits = g.records.iter().filter(|r| eval_max_flag(&c, r).0).count();
        for r in &g.records {
            for v in levels(r) {
                assert!((v - 37.0).abs() <= 6.0 * 0.8);
            }
        }
        let p1 = 1.0 - StatNormal::new(37.0, 0.8).unwrap().cdf(threshold);
        let expected = (1.0 - (1.0 - p1).powi(4)) * g.records.len() as f64;
        let rel = (hits as f64 - expected).abs() / expected;
        assert!(rel < 0.5, "hits {hits} expected {expected}");
    }

    #[test]
    fn deterministic_and_sorted() {
        let s = GoldenCase::Concurrence.scenario();
        let a = s.generate(GOLDEN_SEED).unwrap();
        let b = s.generate(GOLDEN_SEED).unwrap();
        assert_eq!(a, b);
        assert!(a.records.windows(2).all(|w| w[0].key() < w[1].key()));
        let c = s.generate(GOLDEN_SEED + 1).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn spike_overrides_one_channel() {
        let g = GoldenCase::Spike.scenario().generate(GOLDEN_SEED).unwrap();
        let t = EpochTime::from_secs(DEFAULT_ORIGIN_UNIX_S + 45.0).unwrap();
        let r = g
            .records
            .iter()
            .find(|r| r.sat_id() == sat(4) && r.epoch_time() == t)
            .unwrap();
        assert!((levels(r)[1] - 48.0).abs() < 1e-9);
        assert!(g.truth.iter().all(|l| !l.jammed));
    }

    #[test]
    fn kurtosis_visible_jammer_sets_bit() {
        let track = TrackSpec::new(sat(1), 33.0, 250.0, 0.0, 0.0, 2.0);
        let jammer = JammerSpec {
            lat: 33.0,
            lon: 250.0,
            power_offset_db: 10.0,
            active: vec![[0.0, 2.0]],
            channels: AffectedChannels::All,
            horizon_db: HALF_POWER_DB,
            kurtosis_visible: true,
        };
        let g = Scenario::new(vec![track], vec![jammer], vec![])
            .generate(3)
            .unwrap();
        assert!(g.records.iter().all(|r| r
            .channels()
            .iter()
            .all(|c| c.has_flag_bit(DEFAULT_KURTOSIS_RFI_BIT))));
    }

    #[test]
    fn toml_round_trip_and_validation() {
        for case in GoldenCase::ALL {
            let s = case.scenario();
            assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
        }
        let minimal = "[[track]]\nsat = 3\nstart_lat = 30\nstart_lon = -110\nheading = 0\nstart = 0\nend = 5\n";
        let s = Scenario::from_toml(minimal).unwrap();
        assert_eq!(s.tracks[0].baseline_db, 37.0);
        assert_eq!(s.origin, DEFAULT_ORIGIN_UNIX_S);

        let bad = [
            "[[track]]\nsat = 9\nstart_lat = 30\nstart_lon = 0\nheading = 0\nstart = 0\nend = 5\n",
            "[[track]]\nsat = 1\nstart_lat = 30\nstart_lon = 0\nheading = 0\nstart = 0\nend = 0.3\n",
            "[[track]]\nsat = 1\nstart_lat = 30\nstart_lon = 0\nheading = 0\nstart = 5\nend = 1\n",
            "[[jammer]]\nlat = 0\nlon = 0\npower_offset_db = 1\nactive = [[5.0, 1.0]]\nchannels = \"all\"\n",
            "[[jammer]]\nlat = 0\nlon = 0\npower_offset_db = 1\nactive = [[0.0, 5.0], [4.0, 8.0]]\nchannels = \"all\"\n",
            "[[jammer]]\nlat = 0\nlon = 0\npower_offset_db = 1\nactive = [[0.0, 5.0]]\nchannels = [5]\n",
            "[[jammer]]\nlat = 0\nlon = 0\npower_offset_db = 1\nactive = [[0.0, 5.0]]\nchannels = \"some\"\n",
            "[[spike]]\nsat = 1\nt = 1.0\nchannel = 1\nlevel_db = 50\n",
            "color = \"blue\"\n",
        ];
        for text in bad {
            assert!(
                matches!(Scenario::from_toml(text), Err(Error::Config(_))),
                "{text}"
            );
        }
        let dup = format!("{minimal}{minimal}");
        assert!(Scenario::from_toml(&dup).is_err());
    }

    #[test]
    fn golden_fixture_is_byte_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = golden_fixture(GOLDEN_SEED, a.path()).unwrap();
        let pb = golden_fixture(GOLDEN_SEED, b.path()).unwrap();
        assert_eq!(pa.len(), 9);
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(
                fs::read(x).unwrap(),
                fs::read(y).unwrap(),
                "{}",
                x.display()
            );
        }
        for case in [GoldenCase::PartialChannel, GoldenCase::Concurrence] {
            let g = case.scenario().generate(GOLDEN_SEED).unwrap();
            assert!(g.truth.iter().any(|l| l.jammed));
        }
    }

    #[test]
    fn partial_channel_truth_window() {
        let g = GoldenCase::PartialChannel
            .scenario()
            .generate(GOLDEN_SEED)
            .unwrap();
        let jammed: Vec<f64> = g
            .truth
            .iter()
            .filter(|l| l.jammed)
            .map(|l| l.epoch_time.as_secs() - DEFAULT_ORIGIN_UNIX_S)
            .collect();
        assert_eq!(jammed.len(), 285);
        assert_eq!(jammed[0], 29.0);
        assert_eq!(*jammed.last().unwrap(), 171.0);
    }
}
