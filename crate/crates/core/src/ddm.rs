//! Delay-Doppler map grids: forbidden-zone noise floor and synthetic patterns.
//!
//! Rows are delay bins, columns are Doppler bins. The specular reflection sits
//! at `(specular_delay_index, specular_doppler_index)`; every row above it
//! (negative delay) belongs to the forbidden zone, where no reflected power can
//! arrive and anything measured is noise or interference.
//!
//! Text format (one grid per file, UTF-8, LF):
//!
//! ```text
//! n_delay n_doppler sp_delay_idx sp_doppler_idx delay_bin_chips doppler_bin_hz
//! <n_doppler space-separated counts>      (repeated n_delay times)
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// Grid geometry without the power values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub n_delay: usize,
    pub n_doppler: usize,
    pub specular_delay_index: usize,
    pub specular_doppler_index: usize,
    pub delay_bin_chips: f64,
    pub doppler_bin_hz: f64,
}

impl Default for GridShape {
    fn default() -> Self {
        GridShape {
            n_delay: 17,
            n_doppler: 11,
            specular_delay_index: 4,
            specular_doppler_index: 5,
            delay_bin_chips: 0.25,
            doppler_bin_hz: 500.0,
        }
    }
}

impl GridShape {
    pub fn validate(&self) -> Result<()> {
        if self.n_delay == 0 || self.n_doppler == 0 {
            return Err(Error::Structural("grid has no bins".into()));
        }
        if self.specular_delay_index >= self.n_delay {
            return Err(Error::Structural(format!(
                "specular delay index {} outside 0..{}",
                self.specular_delay_index, self.n_delay
            )));
        }
        if self.specular_doppler_index >= self.n_doppler {
            return Err(Error::Structural(format!(
                "specular Doppler index {} outside 0..{}",
                self.specular_doppler_index, self.n_doppler
            )));
        }
        if self.specular_delay_index == 0 {
            return Err(Error::Structural(
                "forbidden zone is empty: specular delay index must be at least 1".into(),
            ));
        }
        if !(self.delay_bin_chips > 0.0 && self.delay_bin_chips.is_finite())
            || !(self.doppler_bin_hz > 0.0 && self.doppler_bin_hz.is_finite())
        {
            return Err(Error::Structural(
                "bin widths must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn forbidden_zone_bins(&self) -> usize {
        self.specular_delay_index * self.n_doppler
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdmGrid {
    shape: GridShape,
    /// Row-major, `n_delay × n_doppler`.
    power: Vec<f64>,
}

impl DdmGrid {
    pub fn new(shape: GridShape, power: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if power.len() != shape.n_delay * shape.n_doppler {
            return Err(Error::Structural(format!(
                "expected {} power values, got {}",
                shape.n_delay * shape.n_doppler,
                power.len()
            )));
        }
        if let Some(bad) = power.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::Structural(format!(
                "power values must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(DdmGrid { shape, power })
    }

    pub fn filled(shape: GridShape, value: f64) -> Result<Self> {
        DdmGrid::new(shape, vec![value; shape.n_delay * shape.n_doppler])
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn get(&self, delay: usize, doppler: usize) -> f64 {
        self.power[delay * self.shape.n_doppler + doppler]
    }

    pub fn row(&self, delay: usize) -> &[f64] {
        let n = self.shape.n_doppler;
        &self.power[delay * n..(delay + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.power
    }

    /// Bin holding the highest power (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, p) in self.power.iter().enumerate() {
            if *p > self.power[best] {
                best = i;
            }
        }
        (best / self.shape.n_doppler, best % self.shape.n_doppler)
    }

    /// Mean power over the forbidden zone (all delay rows before the specular row).
    pub fn noise_floor(&self) -> f64 {
        let zone = &self.power[..self.shape.forbidden_zone_bins()];
        zone.iter().sum::<f64>() / zone.len() as f64
    }

    /// Adds `stripe_counts` to every delay bin of one Doppler column, the
    /// signature a narrowband jammer leaves on the map.
    pub fn inject_jammer(&self, doppler_index: usize, stripe_counts: f64) -> Result<DdmGrid> {
        if doppler_index >= self.shape.n_doppler {
            return Err(Error::Argument(format!(
                "Doppler index {doppler_index} outside 0..{}",
                self.shape.n_doppler
            )));
        }
        check_additive(stripe_counts)?;
        let mut out = self.clone();
        let n = self.shape.n_doppler;
        for delay in 0..self.shape.n_delay {
            out.power[delay * n + doppler_index] += stripe_counts;
        }
        Ok(out)
    }

    /// Adds `add_counts` to each bin of a free-form mask. Duplicate mask
    /// entries are counted once.
    pub fn inject_atypical<I>(&self, mask: I, add_counts: f64) -> Result<DdmGrid>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        check_additive(add_counts)?;
        let mask: BTreeSet<(usize, usize)> = mask.into_iter().collect();
        if let Some(&(d, f)) = mask
            .iter()
            .find(|(d, f)| *d >= self.shape.n_delay || *f >= self.shape.n_doppler)
        {
            return Err(Error::Argument(format!(
                "mask bin ({d}, {f}) outside {}×{} grid",
                self.shape.n_delay, self.shape.n_doppler
            )));
        }
        let mut out = self.clone();
        for (d, f) in mask {
            out.power[d * self.shape.n_doppler + f] += add_counts;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let s = &self.shape;
        let mut out = format!(
            "{} {} {} {} {} {}\n",
            s.n_delay,
            s.n_doppler,
            s.specular_delay_index,
            s.specular_doppler_index,
            s.delay_bin_chips,
            s.doppler_bin_hz
        );
        for d in 0..s.n_delay {
            for (i, p) in self.row(d).iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{p}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<DdmGrid> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "header", "empty input"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(parse_err(
                1,
                "header",
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let int = |i: usize, name: &str| -> Result<usize> {
            fields[i]
                .parse::<usize>()
                .map_err(|e| parse_err(1, name, e.to_string()))
        };
        let real = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| parse_err(1, name, e.to_string()))
        };
        let shape = GridShape {
            n_delay: int(0, "n_delay")?,
            n_doppler: int(1, "n_doppler")?,
            specular_delay_index: int(2, "sp_delay_idx")?,
            specular_doppler_index: int(3, "sp_doppler_idx")?,
            delay_bin_chips: real(4, "delay_bin_chips")?,
            doppler_bin_hz: real(5, "doppler_bin_hz")?,
        };
        shape.validate()?;

        let mut power = Vec::with_capacity(shape.n_delay * shape.n_doppler);
        for delay in 0..shape.n_delay {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| parse_err(delay + 2, "row", format!("missing delay row {delay}")))?;
            let before = power.len();
            for tok in line.split_whitespace() {
                let v = tok
                    .parse::<f64>()
                    .map_err(|e| parse_err(idx + 1, "counts", format!("{tok:?}: {e}")))?;
                power.push(v);
            }
            if power.len() - before != shape.n_doppler {
                return Err(parse_err(
                    idx + 1,
                    "counts",
                    format!(
                        "expected {} values, found {}",
                        shape.n_doppler,
                        power.len() - before
                    ),
                ));
            }
        }
        if let Some((idx, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(parse_err(
                idx + 1,
                "row",
                format!("unexpected trailing content {line:?}"),
            ));
        }
        DdmGrid::new(shape, power)
    }
}

fn check_additive(v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "added counts must be finite and nonnegative, got {v}"
        )))
    }
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Receiver noise composition: counts = G·(P_a + P_r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    system_gain: f64,
    antenna_noise_power: f64,
    receiver_noise_power: f64,
}

impl NoiseModel {
    pub fn new(
        system_gain: f64,
        antenna_noise_power: f64,
        receiver_noise_power: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("system gain", system_gain),
            ("antenna noise power", antenna_noise_power),
            ("receiver noise power", receiver_noise_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(NoiseModel {
            system_gain,
            antenna_noise_power,
            receiver_noise_power,
        })
    }

    pub fn nominal_noise_counts(&self) -> f64 {
        self.system_gain * (self.antenna_noise_power + self.receiver_noise_power)
    }
}

/// Parameters of [`synth_normal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// Template power added at the specular bin.
    pub peak_counts: f64,
    /// Surface roughness in `[0, 1]`; widens the horseshoe arms.
    pub roughness: f64,
    /// Independent looks averaged into every bin. Per-bin noise is
    /// Gamma(looks, 1/looks) scaled by the nominal counts, so `looks = 1`
    /// gives exponential fluctuation.
    pub incoherent_looks: f64,
}

impl SynthParams {
    pub const DEFAULT_LOOKS: f64 = 100.0;

    pub fn new(peak_counts: f64, roughness: f64) -> Self {
        SynthParams {
            peak_counts,
            roughness,
            incoherent_looks: Self::DEFAULT_LOOKS,
        }
    }
}

/// Normalized horseshoe template, 1.0 at the specular bin and zero in the
/// forbidden zone. `delay` and `doppler` are offsets from the specular bin in
/// bins.
pub fn horseshoe_template(delay: f64, doppler: f64, roughness: f64) -> f64 {
    if delay < 0.0 {
        return 0.0;
    }
    let decay_bins = 0.5 + 4.0 * roughness;
    let opening = 2.0 * roughness;
    let width = 0.5 + 1.5 * roughness;
    let arm = doppler.abs() - opening * delay.sqrt();
    (-delay / decay_bins).exp() * (-(arm * arm) / (2.0 * width * width)).exp()
}

/// Synthesizes a clean reflection: multiplicative thermal noise around the
/// nominal count level everywhere, plus a horseshoe template peaking at the
/// specular bin outside the forbidden zone.
pub fn synth_normal(
    shape: GridShape,
    model: &NoiseModel,
    params: SynthParams,
    seed: u64,
) -> Result<DdmGrid> {
    shape.validate()?;
    let nominal = model.nominal_noise_counts();
    if !(params.peak_counts > nominal && params.peak_counts.is_finite()) {
        return Err(Error::Argument(format!(
            "peak counts {} must exceed the nominal noise level {nominal}",
            params.peak_counts
        )));
    }
    if !(0.0..=1.0).contains(&params.roughness) {
        return Err(Error::Argument(format!(
            "roughness {} outside [0, 1]",
            params.roughness
        )));
    }
    let looks = params.incoherent_looks;
    let fluctuation = Gamma::new(looks, 1.0 / looks)
        .map_err(|e| Error::Argument(format!("incoherent looks {looks}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut power = Vec::with_capacity(shape.n_delay * shape.n_doppler);
    for delay in 0..shape.n_delay {
        for doppler in 0..shape.n_doppler {
            let noise = nominal * fluctuation.sample(&mut rng);
            let template = horseshoe_template(
                delay as f64 - shape.specular_delay_index as f64,
                doppler as f64 - shape.specular_doppler_index as f64,
                params.roughness,
            );
            power.push(noise + params.peak_counts * template);
        }
    }
    DdmGrid::new(shape, power)
}
