//! Exogenous measurement series: load, generation and prices per step.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["t_min", "load_kw", "pv_kw", "price_buy", "price_sell"];

/// Loads are stored negative (withdrawal), generation positive.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExogenousSeries {
    pub load: Vec<f64>,
    pub generation: Vec<f64>,
    pub price_buy: Vec<f64>,
    pub price_sell: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t_min: f64,
    load_kw: f64,
    pv_kw: f64,
    price_buy: f64,
    price_sell: f64,
}

impl ExogenousSeries {
    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    /// Net load `d = load + generation` at step `t`.
    pub fn net_load(&self, t: usize) -> f64 {
        self.load[t] + self.generation[t]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.load.len();
        if self.generation.len() != n || self.price_buy.len() != n || self.price_sell.len() != n {
            return Err(Error::Data("series columns have different lengths".into()));
        }
        for t in 0..n {
            let row = [self.load[t], self.generation[t], self.price_buy[t], self.price_sell[t]];
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {t}: non-finite value")));
            }
            if self.load[t] > 0.0 {
                return Err(Error::Data(format!("row {t}: load must be <= 0, got {}", self.load[t])));
            }
            if self.generation[t] < 0.0 {
                return Err(Error::Data(format!("row {t}: generation must be >= 0, got {}", self.generation[t])));
            }
            if self.price_buy[t] < 0.0 || self.price_sell[t] < 0.0 {
                return Err(Error::Data(format!("row {t}: prices must be >= 0")));
            }
        }
        Ok(())
    }

    /// Number of complete days of `steps_per_day` steps.
    pub fn num_days(&self, steps_per_day: usize) -> usize {
        self.len() / steps_per_day.max(1)
    }

    pub fn slice(&self, start: usize, len: usize) -> ExogenousSeries {
        let end = (start + len).min(self.len());
        ExogenousSeries {
            load: self.load[start..end].to_vec(),
            generation: self.generation[start..end].to_vec(),
            price_buy: self.price_buy[start..end].to_vec(),
            price_sell: self.price_sell[start..end].to_vec(),
        }
    }

    pub fn append(&mut self, other: &ExogenousSeries) {
        self.load.extend_from_slice(&other.load);
        self.generation.extend_from_slice(&other.generation);
        self.price_buy.extend_from_slice(&other.price_buy);
        self.price_sell.extend_from_slice(&other.price_sell);
    }

    /// Extends by repeating the last row `extra` times.
    pub fn pad_hold(&mut self, extra: usize) {
        if self.is_empty() {
            return;
        }
        for col in [&mut self.load, &mut self.generation, &mut self.price_buy, &mut self.price_sell] {
            let last = *col.last().unwrap();
            col.extend(std::iter::repeat_n(last, extra));
        }
    }

    pub fn write_csv(&self, path: &Path, minutes_per_step: f64) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for t in 0..self.len() {
            w.serialize(Row {
                t_min: t as f64 * minutes_per_step,
                load_kw: self.load[t],
                pv_kw: self.generation[t],
                price_buy: self.price_buy[t],
                price_sell: self.price_sell[t],
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_series(path: &Path) -> Result<ExogenousSeries> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_series(file)
}

pub fn read_series<R: std::io::Read>(reader: R) -> Result<ExogenousSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != CSV_HEADER {
        return Err(Error::Data(format!(
            "expected header {:?}, found {:?}",
            CSV_HEADER.join(","),
            names.join(",")
        )));
    }
    let mut out = ExogenousSeries::default();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {i}: {e}")))?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Data(format!(
                "row {i}: expected {} columns, found {}",
                CSV_HEADER.len(),
                record.len()
            )));
        }
        let row: Row = record
            .deserialize(Some(&header))
            .map_err(|e| Error::Data(format!("row {i}: {e}")))?;
        out.load.push(row.load_kw);
        out.generation.push(row.pv_kw);
        out.price_buy.push(row.price_buy);
        out.price_sell.push(row.price_sell);
    }
    out.validate()?;
    Ok(out)
}

/// Shape of a synthetic household day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthProfile {
    pub steps_per_day: usize,
    /// Clear-sky PV peak (kW).
    pub pv_peak_kw: f64,
    /// Daily cloudiness scale is drawn uniformly from this range.
    pub pv_scale_min: f64,
    pub pv_scale_max: f64,
    pub sunrise_h: f64,
    pub sunset_h: f64,
    pub load_base_kw: f64,
    pub morning_peak_kw: f64,
    pub morning_peak_h: f64,
    pub evening_peak_kw: f64,
    pub evening_peak_h: f64,
    /// Uniform per-step load jitter amplitude (kW).
    pub load_jitter_kw: f64,
    pub price_buy: f64,
    pub price_sell: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            steps_per_day: 1440,
            pv_peak_kw: 4.0,
            pv_scale_min: 0.5,
            pv_scale_max: 1.0,
            sunrise_h: 6.0,
            sunset_h: 20.0,
            load_base_kw: 0.3,
            morning_peak_kw: 0.9,
            morning_peak_h: 7.5,
            evening_peak_kw: 1.6,
            evening_peak_h: 19.0,
            load_jitter_kw: 0.2,
            price_buy: 0.30,
            price_sell: 0.06,
        }
    }
}

impl SynthProfile {
    /// A sunless day with a heavy base load. A controller that greedily
    /// discharges storage drains it well below what islanding needs.
    pub fn stress() -> Self {
        SynthProfile {
            pv_peak_kw: 0.0,
            load_base_kw: 1.5,
            morning_peak_kw: 1.0,
            evening_peak_kw: 2.5,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pv_peak_kw,
            self.pv_scale_min,
            self.pv_scale_max,
            self.sunrise_h,
            self.sunset_h,
            self.load_base_kw,
            self.morning_peak_kw,
            self.morning_peak_h,
            self.evening_peak_kw,
            self.evening_peak_h,
            self.load_jitter_kw,
            self.price_buy,
            self.price_sell,
        ];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams("synthetic profile values must be finite and >= 0".into()));
        }
        if self.steps_per_day == 0 {
            return Err(Error::InvalidParams("steps_per_day must be positive".into()));
        }
        if !(self.sunrise_h < self.sunset_h && self.sunset_h <= 24.0) {
            return Err(Error::InvalidParams("sunrise must precede sunset within the day".into()));
        }
        if self.pv_scale_min > self.pv_scale_max || self.pv_scale_max > 1.0 {
            return Err(Error::InvalidParams("PV scale range must satisfy min <= max <= 1".into()));
        }
        Ok(())
    }

    /// Clear-sky PV shape at hour `h`: a squared sine over daylight.
    pub fn pv_shape(&self, h: f64) -> f64 {
        if h <= self.sunrise_h || h >= self.sunset_h {
            return 0.0;
        }
        let phase = std::f64::consts::PI * (h - self.sunrise_h) / (self.sunset_h - self.sunrise_h);
        phase.sin().powi(2)
    }

    fn load_shape(&self, h: f64) -> f64 {
        let bump = |center: f64, width: f64| (-(h - center).powi(2) / (2.0 * width * width)).exp();
        self.load_base_kw
            + self.morning_peak_kw * bump(self.morning_peak_h, 0.75)
            + self.evening_peak_kw * bump(self.evening_peak_h, 1.5)
    }
}

/// One deterministic synthetic day.
pub fn synth_day(seed: u64, profile: &SynthProfile) -> ExogenousSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = profile.steps_per_day;
    let scale = rng.random_range(profile.pv_scale_min..=profile.pv_scale_max);
    let mut out = ExogenousSeries {
        load: Vec::with_capacity(steps),
        generation: Vec::with_capacity(steps),
        price_buy: vec![profile.price_buy; steps],
        price_sell: vec![profile.price_sell; steps],
    };
    for t in 0..steps {
        let h = 24.0 * t as f64 / steps as f64;
        out.generation.push(profile.pv_peak_kw * scale * profile.pv_shape(h));
        let jitter = profile.load_jitter_kw * rng.random::<f64>();
        out.load.push(-(profile.load_shape(h) + jitter));
    }
    out
}

/// `days` consecutive synthetic days; day `i` uses a seed derived from `seed` and `i`.
pub fn synth_days(seed: u64, days: usize, profile: &SynthProfile) -> ExogenousSeries {
    let mut out = ExogenousSeries::default();
    for d in 0..days {
        out.append(&synth_day(day_seed(seed, d as u64), profile));
    }
    out
}

fn day_seed(seed: u64, day: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(day.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ 0x5EED
}
