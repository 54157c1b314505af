//! Request and response bodies of the HTTP service, plus the blocking
//! operations behind them. The server wraps these; the client only needs
//! the types.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::czono::{self, ConstrainedZonotope};
use crate::env::agents::AgentKind;
use crate::env::forecast::Forecaster;
use crate::env::metrics::{EpisodeTrace, Metrics};
use crate::env::{episode_seed, run_days, Dataset, ShieldMode};
use crate::error::{Error, Result};
use crate::reach;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafeSetRequest {
    /// Overrides the server's configuration for this request.
    pub config: Option<Config>,
    pub day: usize,
    /// Step within the day at which the islanding window starts.
    pub t0: usize,
    /// Run seed; defaults to the configuration's seed.
    pub seed: Option<u64>,
    /// Also compute the per-step safe band over the whole day.
    pub band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullRow {
    pub t: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SafeSetResponse {
    pub day: usize,
    pub t0: usize,
    pub horizon: usize,
    pub d_lower: Vec<f64>,
    /// Interval hull of every set in the sequence, window start first.
    pub hulls: Vec<HullRow>,
    /// The safe set at the window start.
    pub set: ConstrainedZonotope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Vec<HullRow>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateRequest {
    pub config: Option<Config>,
    pub agent: Option<AgentKind>,
    pub mode: Option<ShieldMode>,
    /// Explicit days; takes precedence over `n_days`.
    pub days: Option<Vec<usize>>,
    /// First `n_days` days of the data.
    pub n_days: Option<usize>,
    pub seed: Option<u64>,
    /// Return the per-step traces as well as the metrics.
    pub traces: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub metrics: Metrics,
    /// Metric rows in report order.
    pub rows: Vec<(String, f64)>,
    #[serde(default)]
    pub traces: Vec<EpisodeTrace>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpenSessionRequest {
    pub config: Option<Config>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: u64,
    pub layout: Vec<String>,
    pub action_dim: usize,
    pub days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ApiError {
    fn from(e: &Error) -> Self {
        ApiError {
            kind: e.kind().into(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ApiError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

pub fn safe_sets(cfg: &Config, req: &SafeSetRequest) -> Result<SafeSetResponse> {
    cfg.validate()?;
    let data = cfg.dataset()?;
    if req.day >= data.days() {
        return Err(Error::InvalidParams(format!(
            "day {} out of range; the dataset has {} days",
            req.day,
            data.days()
        )));
    }
    let t_day = data.steps_per_day();
    if req.t0 >= t_day {
        return Err(Error::InvalidParams(format!("t0 {} outside a day of {t_day} steps", req.t0)));
    }
    let settings = &cfg.solver;
    let params = &cfg.grid;
    let seed = episode_seed(req.seed.unwrap_or(cfg.seed), req.day);
    let forecaster = Forecaster::new(data.series(), &cfg.forecast, seed)?;
    let start = req.day * t_day;
    let bound = forecaster.lower_bound(start + req.t0, params.islanding_h)?;
    let seq = reach::compute_safe_sets(params, &bound, settings)?;
    let hulls = reach::sequence_hulls(&seq, settings)?
        .into_iter()
        .enumerate()
        .map(|(t, h)| HullRow {
            t,
            lower: h.lower,
            upper: h.upper,
        })
        .collect();
    let band = if req.band {
        let mut rows = Vec::with_capacity(t_day);
        for t in 0..t_day {
            let b = forecaster.lower_bound(start + t, params.islanding_h)?;
            let first = reach::safe_set_at_start(params, &b, settings)?;
            let h = czono::interval_hull(&first, settings)?;
            rows.push(HullRow {
                t,
                lower: h.lower,
                upper: h.upper,
            });
        }
        Some(rows)
    } else {
        None
    };
    Ok(SafeSetResponse {
        day: req.day,
        t0: req.t0,
        horizon: seq.horizon(),
        d_lower: bound.d_lower,
        hulls,
        set: seq.sets.into_iter().next().expect("sequence has a first set"),
        band,
    })
}

pub fn simulate(cfg: &Config, req: &SimulateRequest) -> Result<SimulateResponse> {
    let mut cfg = cfg.clone();
    if let Some(mode) = req.mode {
        cfg.shield_mode = mode;
    }
    cfg.validate()?;
    let data: Dataset = cfg.dataset()?;
    let days = match (&req.days, req.n_days) {
        (Some(days), _) => {
            cfg.days = days.clone();
            cfg.resolve_days(&data)?
        }
        (None, Some(n)) => {
            if n == 0 || n > data.days() {
                return Err(Error::InvalidParams(format!(
                    "n_days {n} must be between 1 and the {} days of data",
                    data.days()
                )));
            }
            (0..n).collect()
        }
        (None, None) => cfg.resolve_days(&data)?,
    };
    let start = Instant::now();
    let (metrics, traces) = run_days(
        &cfg.env_config(),
        &data,
        req.agent.unwrap_or(cfg.agent),
        &days,
        req.seed.unwrap_or(cfg.seed),
    )?;
    Ok(SimulateResponse {
        rows: metrics.rows().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        metrics,
        traces: if req.traces { traces } else { Vec::new() },
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
