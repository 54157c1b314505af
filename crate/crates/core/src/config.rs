//! Run configuration loaded from JSON. Every section is optional and falls
//! back to the reference grid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::agents::AgentKind;
use crate::env::forecast::ForecastModel;
use crate::env::series::{load_series, synth_days, ExogenousSeries, SynthProfile};
use crate::env::{Dataset, EnvConfig, RewardConfig, ShieldMode};
use crate::error::{Error, Result};
use crate::gridmodel::GridParams;
use crate::lpqp::SolverSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic {
        #[serde(default = "default_days")]
        days: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        profile: SynthProfile,
    },
    Csv {
        path: PathBuf,
    },
}

fn default_days() -> usize {
    30
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            days: default_days(),
            seed: 0,
            profile: SynthProfile::default(),
        }
    }
}

impl DataSource {
    pub fn load(&self, base_dir: Option<&Path>) -> Result<ExogenousSeries> {
        match self {
            DataSource::Synthetic { days, seed, profile } => {
                profile.validate()?;
                if *days == 0 {
                    return Err(Error::InvalidParams("synthetic data needs at least one day".into()));
                }
                Ok(synth_days(*seed, *days, profile))
            }
            DataSource::Csv { path } => {
                let resolved = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                load_series(&resolved)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridParams,
    pub forecast: ForecastModel,
    pub reward: RewardConfig,
    pub shield_mode: ShieldMode,
    pub agent: AgentKind,
    pub seed: u64,
    pub data: DataSource,
    /// Days to evaluate; all days of the data when empty.
    pub days: Vec<usize>,
    pub out: Option<PathBuf>,
    pub solver: SolverSettings,
    pub audit: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            grid: GridParams::default(),
            forecast: ForecastModel::default(),
            reward: RewardConfig::default(),
            shield_mode: ShieldMode::FullShield,
            agent: AgentKind::Greedy,
            seed: 0,
            data: DataSource::default(),
            days: Vec::new(),
            out: None,
            solver: SolverSettings::default(),
            audit: false,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let (DataSource::Csv { path: csv }, Some(dir)) = (&mut cfg.data, path.parent()) {
            if csv.is_relative() {
                *csv = dir.join(&*csv);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.forecast.validate()?;
        let r = &self.reward;
        if ![r.alpha, r.beta, r.violation_penalty].iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::InvalidParams("reward weights must be finite and non-negative".into()));
        }
        let s = &self.solver;
        if !(s.tol_feas > 0.0 && s.tol_gap > 0.0 && s.max_iter > 0) {
            return Err(Error::InvalidParams("solver tolerances and iteration limit must be positive".into()));
        }
        Ok(())
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            grid: self.grid.clone(),
            forecast: self.forecast.clone(),
            reward: self.reward.clone(),
            mode: self.shield_mode,
            solver: self.solver,
            audit: self.audit,
        }
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::new(self.data.load(None)?, &self.env_config())
    }

    /// Requested days, or every day of `data`. Out-of-range days are an error.
    pub fn resolve_days(&self, data: &Dataset) -> Result<Vec<usize>> {
        if self.days.is_empty() {
            return Ok((0..data.days()).collect());
        }
        if let Some(&bad) = self.days.iter().find(|&&d| d >= data.days()) {
            return Err(Error::InvalidParams(format!(
                "day {bad} out of range; the dataset has {} days",
                data.days()
            )));
        }
        Ok(self.days.clone())
    }
}
