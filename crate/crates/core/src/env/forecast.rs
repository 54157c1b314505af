//! Synthetic forecasts: smoothed measurements plus bounded uniform noise
//! whose amplitude grows with the prediction horizon.
//!
//! Noise draws are keyed on `(seed, issue step, stream)`, so a forecast issued
//! at a given step is identical no matter when or how often it is requested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::series::ExogenousSeries;
use crate::error::{Error, Result};
use crate::reach::ForecastLowerBound;

/// Which noise draws feed the islanding lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundSource {
    /// A dedicated per-step stream, independent of the observed forecasts.
    Independent,
    /// The same draws that produce the observed forecasts.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastModel {
    pub smoothing_window: usize,
    pub smoothing_passes: usize,
    pub base_amplitude_gen: f64,
    pub base_amplitude_load: f64,
    /// Per-step growth factor of the noise amplitude.
    pub growth_coefficient: f64,
    pub horizons: Vec<usize>,
    pub lower_bound_source: LowerBoundSource,
}

impl Default for ForecastModel {
    fn default() -> Self {
        ForecastModel {
            smoothing_window: 144,
            smoothing_passes: 2,
            base_amplitude_gen: 0.05,
            base_amplitude_load: 0.01,
            growth_coefficient: 1.0014,
            horizons: vec![120, 240, 360, 480],
            lower_bound_source: LowerBoundSource::Independent,
        }
    }
}

impl ForecastModel {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == 0 {
            return Err(Error::InvalidParams("smoothing window must be at least 1".into()));
        }
        if !(self.base_amplitude_gen >= 0.0 && self.base_amplitude_load >= 0.0) {
            return Err(Error::InvalidParams("noise amplitudes must be non-negative".into()));
        }
        if !(self.growth_coefficient >= 1.0 && self.growth_coefficient.is_finite()) {
            return Err(Error::InvalidParams("growth coefficient must be finite and >= 1".into()));
        }
        Ok(())
    }

    /// Noise amplitude `base · growth^k` at horizon `k`.
    pub fn amplitude(&self, base: f64, k: usize) -> f64 {
        base * self.growth_coefficient.powi(k as i32)
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(0)
    }
}

/// Centered moving average, window truncated at the series edges.
/// Even windows take one more sample behind than ahead.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || window <= 1 {
        return x.to_vec();
    }
    let behind = window / 2;
    let ahead = window - 1 - behind;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(behind);
            let hi = (t + ahead).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

pub fn smooth(x: &[f64], window: usize, passes: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    for _ in 0..passes {
        out = moving_average(&out, window);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonForecast {
    pub horizon: usize,
    pub load: f64,
    pub generation: f64,
    pub price_buy: f64,
    pub price_sell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecasts {
    pub issued_at: usize,
    pub horizons: Vec<HorizonForecast>,
    pub lower_bound: ForecastLowerBound,
}

/// Precomputed smoothing over one series, issuing forecasts on demand.
#[derive(Debug, Clone)]
pub struct Forecaster {
    model: ForecastModel,
    seed: u64,
    load: Vec<f64>,
    generation: Vec<f64>,
    price_buy: Vec<f64>,
    price_sell: Vec<f64>,
}

const STREAM_OBSERVED: u64 = 1;
const STREAM_ISLANDING: u64 = 2;

impl Forecaster {
    pub fn new(series: &ExogenousSeries, model: &ForecastModel, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(Forecaster {
            model: model.clone(),
            seed,
            load: smooth(&series.load, model.smoothing_window, model.smoothing_passes),
            generation: smooth(&series.generation, model.smoothing_window, model.smoothing_passes),
            price_buy: series.price_buy.clone(),
            price_sell: series.price_sell.clone(),
        })
    }

    pub fn model(&self) -> &ForecastModel {
        &self.model
    }

    pub fn smoothed_load(&self) -> &[f64] {
        &self.load
    }

    pub fn smoothed_generation(&self) -> &[f64] {
        &self.generation
    }

    fn rng(&self, t0: usize, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng.set_word_pos((t0 as u128) << 20);
        rng
    }

    fn check_range(&self, t0: usize, span: usize) -> Result<()> {
        if t0 + span > self.load.len() {
            return Err(Error::Data(format!(
                "forecast at step {t0} needs {span} steps ahead but the series ends at {}",
                self.load.len()
            )));
        }
        Ok(())
    }

    /// Noisy load and generation forecasts for horizons `0..count` issued at `t0`.
    fn noisy(&self, t0: usize, count: usize, stream: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = self.rng(t0, stream);
        let mut load = Vec::with_capacity(count);
        let mut gen = Vec::with_capacity(count);
        for k in 0..count {
            let ul: f64 = rng.random_range(-1.0..=1.0);
            let ug: f64 = rng.random_range(-1.0..=1.0);
            load.push(self.load[t0 + k] + ul * self.model.amplitude(self.model.base_amplitude_load, k));
            gen.push(self.generation[t0 + k] + ug * self.model.amplitude(self.model.base_amplitude_gen, k));
        }
        (load, gen)
    }

    /// Lower bound of the net load over `[t0, t0 + h)`.
    pub fn lower_bound(&self, t0: usize, h: usize) -> Result<ForecastLowerBound> {
        self.check_range(t0, h)?;
        let (count, stream) = match self.model.lower_bound_source {
            LowerBoundSource::Independent => (h, STREAM_ISLANDING),
            LowerBoundSource::Shared => (h.max(self.model.max_horizon() + 1), STREAM_OBSERVED),
        };
        let count = count.min(self.load.len() - t0);
        let (load, gen) = self.noisy(t0, count, stream);
        let d_lower = (0..h)
            .map(|k| {
                (load[k] - self.model.amplitude(self.model.base_amplitude_load, k))
                    + (gen[k] - self.model.amplitude(self.model.base_amplitude_gen, k))
            })
            .collect();
        Ok(ForecastLowerBound { d_lower })
    }

    /// Forecasts at the configured horizons, issued at `t0`.
    pub fn horizons(&self, t0: usize) -> Result<Vec<HorizonForecast>> {
        let count = self.model.max_horizon() + 1;
        self.check_range(t0, count)?;
        let (load, gen) = self.noisy(t0, count, STREAM_OBSERVED);
        Ok(self
            .model
            .horizons
            .iter()
            .map(|&k| HorizonForecast {
                horizon: k,
                load: load[k],
                generation: gen[k],
                price_buy: self.price_buy[t0 + k],
                price_sell: self.price_sell[t0 + k],
            })
            .collect())
    }

    /// Forecasts at the configured horizons plus the islanding lower bound.
    pub fn issue(&self, t0: usize, h: usize) -> Result<Forecasts> {
        Ok(Forecasts {
            issued_at: t0,
            horizons: self.horizons(t0)?,
            lower_bound: self.lower_bound(t0, h)?,
        })
    }
}

/// One-shot convenience over [`Forecaster`].
pub fn make_forecasts(
    series: &ExogenousSeries,
    t0: usize,
    model: &ForecastModel,
    seed: u64,
    islanding_h: usize,
) -> Result<Forecasts> {
    Forecaster::new(series, model, seed)?.issue(t0, islanding_h)
}
