//! Discrete-time micro-grid MDP with the safety layer in the loop.
//!
//! One [`MicrogridEnv`] runs one episode (a day of `T` steps) at a time.
//! Every step the proposed action is projected, the true storage dynamics
//! are applied, and cost, penalty and islanding violation are recorded.

pub mod agents;
pub mod forecast;
pub mod metrics;
pub mod series;

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::czono::{self, ConstrainedZonotope};
use crate::error::{Error, Result};
use crate::gridmodel::{self, GridParams};
use crate::lpqp::SolverSettings;
use crate::reach::SafeSetCache;
use crate::shield::{self, Action, SafeAction};

use agents::{Agent, AgentKind};
use forecast::{ForecastModel, Forecaster, HorizonForecast};
use metrics::{EpisodeTrace, Metrics, StepRecord};
use series::ExogenousSeries;

/// Observation layout version carried by every wire frame.
pub const OBS_LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShieldMode {
    FullShield,
    BaselineShield,
}

impl std::str::FromStr for ShieldMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "full_shield" | "full" => Ok(ShieldMode::FullShield),
            "baseline_shield" | "baseline" => Ok(ShieldMode::BaselineShield),
            other => Err(format!("unknown mode '{other}' (expected full_shield or baseline_shield)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Penalty per kWh of islanding violation, applied in baseline mode only.
    pub violation_penalty: f64,
}

impl RewardConfig {
    /// `−α·cost − β·penalty`.
    pub fn reward(&self, cost: f64, penalty: f64) -> f64 {
        -self.alpha * cost - self.beta * penalty
    }
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha: 0.5,
            beta: 0.5,
            violation_penalty: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub grid: GridParams,
    pub forecast: ForecastModel,
    pub reward: RewardConfig,
    pub mode: ShieldMode,
    pub solver: SolverSettings,
    /// Measure the distance of every post-state to the shield target (one extra LP per step).
    pub audit: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            grid: GridParams::default(),
            forecast: ForecastModel::default(),
            reward: RewardConfig::default(),
            mode: ShieldMode::FullShield,
            solver: SolverSettings::default(),
            audit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub e: Vec<f64>,
    pub p_load: f64,
    pub p_gen: f64,
    pub price_buy: f64,
    pub price_sell: f64,
    pub forecasts: Vec<HorizonForecast>,
}

impl Observation {
    /// Flat layout: `e_1..e_n, p_load, p_gen, price_buy, price_sell`, then per
    /// horizon in configured order `load, generation, price_buy, price_sell`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.e.clone();
        v.extend([self.p_load, self.p_gen, self.price_buy, self.price_sell]);
        for f in &self.forecasts {
            v.extend([f.load, f.generation, f.price_buy, f.price_sell]);
        }
        v
    }

    /// Field names matching [`Observation::to_vec`].
    pub fn layout(n: usize, horizons: &[usize]) -> Vec<String> {
        let mut names: Vec<String> = (1..=n).map(|i| format!("e_{i}")).collect();
        names.extend(["p_load", "p_gen", "price_buy", "price_sell"].map(String::from));
        for k in horizons {
            for f in ["load_hat", "gen_hat", "price_buy_hat", "price_sell_hat"] {
                names.push(format!("{f}@{k}"));
            }
        }
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub safe_action: Vec<f64>,
    pub correction: f64,
    pub violation: f64,
    pub shield_time: f64,
    pub cost: f64,
    pub penalty: f64,
    pub balance_residual: f64,
    /// Largest simultaneous charge/discharge over storages.
    pub overlap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Series plus padding so forecasts near the final step stay in range.
#[derive(Debug, Clone)]
pub struct Dataset {
    series: Arc<ExogenousSeries>,
    days: usize,
    steps_per_day: usize,
}

impl Dataset {
    pub fn new(mut series: ExogenousSeries, cfg: &EnvConfig) -> Result<Self> {
        series.validate()?;
        let t = cfg.grid.horizon_t;
        let days = series.num_days(t);
        if days == 0 {
            return Err(Error::Data(format!(
                "series has {} steps, fewer than one day of {t}",
                series.len()
            )));
        }
        series.load.truncate(days * t);
        series.generation.truncate(days * t);
        series.price_buy.truncate(days * t);
        series.price_sell.truncate(days * t);
        series.pad_hold(cfg.forecast.max_horizon().max(cfg.grid.islanding_h) + 2);
        Ok(Dataset {
            series: Arc::new(series),
            days,
            steps_per_day: t,
        })
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn series(&self) -> &ExogenousSeries {
        &self.series
    }

    pub fn steps_per_day(&self) -> usize {
        self.steps_per_day
    }
}

#[derive(Debug)]
struct Episode {
    day: usize,
    t: usize,
    e: Vec<f64>,
    forecaster: Forecaster,
    trace: EpisodeTrace,
    done: bool,
}

pub struct MicrogridEnv {
    cfg: EnvConfig,
    data: Dataset,
    cache: Arc<SafeSetCache>,
    episode: Option<Episode>,
}

impl MicrogridEnv {
    pub fn new(cfg: EnvConfig, data: Dataset) -> Result<Self> {
        cfg.grid.validate()?;
        cfg.forecast.validate()?;
        Ok(MicrogridEnv {
            cfg,
            data,
            cache: Arc::new(SafeSetCache::default()),
            episode: None,
        })
    }

    /// Shares a safe-set cache between environments over the same grid.
    pub fn with_cache(mut self, cache: Arc<SafeSetCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn action_dim(&self) -> usize {
        self.cfg.grid.n() + self.cfg.grid.m()
    }

    pub fn trace(&self) -> Option<&EpisodeTrace> {
        self.episode.as_ref().map(|e| &e.trace)
    }

    pub fn take_trace(&mut self) -> Option<EpisodeTrace> {
        self.episode.take().map(|e| e.trace)
    }

    pub fn state(&self) -> Option<&[f64]> {
        self.episode.as_ref().map(|e| e.e.as_slice())
    }

    fn safe_set(&self, forecaster: &Forecaster, s: usize) -> Result<Arc<ConstrainedZonotope>> {
        let bound = forecaster.lower_bound(s, self.cfg.grid.islanding_h)?;
        self.cache.get_or_compute(&self.cfg.grid, &bound, &self.cfg.solver)
    }

    /// Safe set at the start of the islanding window beginning at absolute step `s`
    /// for the given episode seed.
    pub fn safe_set_for(&self, seed: u64, s: usize) -> Result<Arc<ConstrainedZonotope>> {
        let forecaster = Forecaster::new(&self.data.series, &self.cfg.forecast, seed)?;
        self.safe_set(&forecaster, s)
    }

    fn observe(&self, forecaster: &Forecaster, s: usize, e: &[f64]) -> Result<Observation> {
        let series = &self.data.series;
        Ok(Observation {
            e: e.to_vec(),
            p_load: series.load[s],
            p_gen: series.generation[s],
            price_buy: series.price_buy[s],
            price_sell: series.price_sell[s],
            forecasts: forecaster.horizons(s)?,
        })
    }

    /// Starts an episode on `day` with the initial charge drawn from that
    /// day's first safe set.
    pub fn reset(&mut self, day: usize, seed: u64) -> Result<Observation> {
        if day >= self.data.days {
            return Err(Error::InvalidParams(format!(
                "day {day} out of range; the dataset has {} days",
                self.data.days
            )));
        }
        self.episode = None;
        let forecaster = Forecaster::new(&self.data.series, &self.cfg.forecast, seed)?;
        let s0 = day * self.data.steps_per_day;
        let safe = self.safe_set(&forecaster, s0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_0000_0000_0001);
        let e = sample_state(&safe, &mut rng, &self.cfg.solver)?;
        let obs = self.observe(&forecaster, s0, &e)?;
        self.episode = Some(Episode {
            day,
            t: 0,
            e,
            forecaster,
            trace: EpisodeTrace::new(day, seed, self.cfg.mode),
            done: false,
        });
        Ok(obs)
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let ep = self
            .episode
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("step called before reset".into()))?;
        if ep.done {
            return Err(Error::InvalidParams("episode is finished; call reset".into()));
        }
        action.check(&self.cfg.grid)?;
        let params = &self.cfg.grid;
        let settings = &self.cfg.solver;
        let s = ep.day * self.data.steps_per_day + ep.t;
        let series = &self.data.series;
        let d_t = series.net_load(s);

        let result = (|| -> Result<(SafeAction, Vec<f64>, f64, Option<f64>)> {
            let safe_next = self.safe_set(&ep.forecaster, s + 1)?;
            let safe = match self.cfg.mode {
                ShieldMode::FullShield => shield::project_action(action, &ep.e, &safe_next, d_t, params, settings)?,
                ShieldMode::BaselineShield => shield::project_action_baseline(action, &ep.e, d_t, params, settings)?,
            };
            let e_next = gridmodel::step_dynamics(&ep.e, &safe.action.to_flat(), params);
            let violation = shield::safety_violation(&e_next, &safe_next, settings)?;
            let target_distance = if self.cfg.audit {
                let x = DVector::from_row_slice(&e_next);
                Some(match self.cfg.mode {
                    ShieldMode::FullShield => czono::distance_inf(&safe_next, &x, settings)?,
                    ShieldMode::BaselineShield => {
                        czono::distance_inf(&czono::from_interval(&params.charge_box())?, &x, settings)?
                    }
                })
            } else {
                None
            };
            Ok((safe, e_next, violation, target_distance))
        })();

        let (safe, e_next, violation, target_distance) = match result {
            Ok(v) => v,
            Err(err) => {
                let ep = self.episode.as_mut().unwrap();
                ep.done = true;
                ep.trace.aborted = Some(err.to_string());
                return Err(err);
            }
        };

        let u = safe.action.to_flat();
        let cost = gridmodel::step_cost(&u, series.price_buy[s], series.price_sell[s], params);
        let reward_cfg = &self.cfg.reward;
        let penalty = match self.cfg.mode {
            ShieldMode::FullShield => safe.correction,
            ShieldMode::BaselineShield => safe.correction + reward_cfg.violation_penalty * violation.max(0.0),
        };
        let reward = reward_cfg.reward(cost, penalty);
        let info = StepInfo {
            safe_action: u.clone(),
            correction: safe.correction,
            violation,
            shield_time: safe.shield_time,
            cost,
            penalty,
            balance_residual: gridmodel::balance_residual(&u, d_t, false, params.n()),
            overlap: safe.overlap().into_iter().fold(0.0, f64::max),
            target_distance,
        };

        let t_next = ep.t + 1;
        let done = t_next >= self.data.steps_per_day;
        let obs = self.observe(&ep.forecaster, s + 1, &e_next)?;
        let ep = self.episode.as_mut().unwrap();
        ep.trace.records.push(StepRecord {
            t: ep.t,
            e: ep.e.clone(),
            e_next: e_next.clone(),
            net_load: d_t,
            proposed: action.to_flat(),
            safe: u,
            correction: info.correction,
            cost,
            penalty,
            reward,
            violation,
            shield_time: info.shield_time,
            overlap: info.overlap,
            balance_residual: info.balance_residual,
            target_distance,
        });
        ep.e = e_next;
        ep.t = t_next;
        ep.done = done;
        Ok(StepOutcome { obs, reward, done, info })
    }
}

/// Draws a point of a non-empty set: a random LP vertex mixed with the
/// center of the axis-extreme points. Not uniform, but reproducible.
pub fn sample_state<R: Rng>(z: &ConstrainedZonotope, rng: &mut R, settings: &SolverSettings) -> Result<Vec<f64>> {
    let k = z.dim();
    let direction = DVector::from_fn(k, |_, _| rng.random_range(-1.0..=1.0));
    let (_, vertex) = czono::support_point(z, &direction, settings)?;
    let mut center = DVector::zeros(k);
    for i in 0..k {
        for sign in [1.0, -1.0] {
            let mut e = DVector::zeros(k);
            e[i] = sign;
            center += czono::support_point(z, &e, settings)?.1;
        }
    }
    center /= (2 * k) as f64;
    let lambda: f64 = rng.random_range(0.0..=1.0);
    Ok((lambda * vertex + (1.0 - lambda) * center).iter().copied().collect())
}

/// Seed of the episode on `day` within a run seeded with `seed`; shared by
/// simulations and safe-set reports so both see the same forecasts.
pub fn episode_seed(seed: u64, day: usize) -> u64 {
    seed.wrapping_add(day as u64).wrapping_mul(0x2545_F491_4F6C_DD1D)
}

/// Runs whole days with a built-in agent. Episodes that abort keep their
/// partial trace and the reason; the remaining days still run.
pub fn run_days(
    cfg: &EnvConfig,
    data: &Dataset,
    agent: AgentKind,
    days: &[usize],
    seed: u64,
) -> Result<(Metrics, Vec<EpisodeTrace>)> {
    let mut env = MicrogridEnv::new(cfg.clone(), data.clone())?;
    let mut traces = Vec::with_capacity(days.len());
    for &day in days {
        let day_seed = episode_seed(seed, day);
        let mut policy: Box<dyn Agent> = agents::make_agent(agent, day_seed);
        run_episode(&mut env, policy.as_mut(), day, day_seed)?;
        traces.push(env.take_trace().expect("episode trace"));
    }
    Ok((Metrics::from_traces(&traces), traces))
}

/// Runs one day; shield or safe-set failures end the episode but are not
/// returned as errors (the trace records them). Reset failures are errors.
pub fn run_episode(env: &mut MicrogridEnv, agent: &mut dyn Agent, day: usize, seed: u64) -> Result<()> {
    let mut obs = env.reset(day, seed)?;
    loop {
        let action = agent.act(&obs, &env.cfg.grid);
        match env.step(&action) {
            Ok(out) => {
                if out.done {
                    return Ok(());
                }
                obs = out.obs;
            }
            Err(Error::ShieldInfeasible(_)) | Err(Error::EmptySafeSet { .. }) | Err(Error::IllPosed(_)) => {
                return Ok(());
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use series::{synth_days, SynthProfile};

    fn env(mode: ShieldMode, audit: bool) -> MicrogridEnv {
        let cfg = EnvConfig {
            mode,
            audit,
            ..Default::default()
        };
        let data = Dataset::new(synth_days(11, 2, &SynthProfile::default()), &cfg).unwrap();
        MicrogridEnv::new(cfg, data).unwrap()
    }

    #[test]
    fn reset_samples_inside_safe_set() {
        let mut env = env(ShieldMode::FullShield, false);
        let obs = env.reset(0, 5).unwrap();
        let safe = env.safe_set_for(5, 0).unwrap();
        assert!(czono::contains(&safe, &DVector::from_row_slice(&obs.e), &SolverSettings::default()).unwrap());
        assert!(obs.e.iter().all(|&e| (0.34..=6.54).contains(&e)));
        let again = env.reset(0, 5).unwrap();
        assert_eq!(obs, again);
        assert_eq!(obs.to_vec().len(), 2 + 4 + 16);
        assert_eq!(Observation::layout(2, &[120, 240, 360, 480]).len(), obs.to_vec().len());
    }

    #[test]
    fn step_accounts_reward() {
        let mut env = env(ShieldMode::FullShield, true);
        let obs = env.reset(1, 2).unwrap();
        let mut agent = agents::GreedyAgent;
        let a = agent.act(&obs, &env.cfg.grid);
        let out = env.step(&a).unwrap();
        let i = &out.info;
        assert!((out.reward + 0.5 * i.cost + 0.5 * i.penalty).abs() < 1e-15);
        assert_eq!(i.penalty, i.correction);
        assert!(i.violation <= 1e-6);
        assert!(i.balance_residual.abs() <= 1e-8);
        assert!(i.target_distance.unwrap() <= 1e-6);
        assert!(!out.done);
    }

    #[test]
    fn safe_action_has_zero_correction_reward() {
        let mut env = env(ShieldMode::FullShield, false);
        env.reset(0, 1).unwrap();
        let mut agent = agents::GreedyAgent;
        // replay the shield's own answer: the correction vanishes
        let obs = env.reset(0, 1).unwrap();
        let first = env.step(&agent.act(&obs, &env.cfg.grid)).unwrap();
        env.reset(0, 1).unwrap();
        let replay = Action::from_flat(&first.info.safe_action, 2).unwrap();
        let out = env.step(&replay).unwrap();
        assert!(out.info.correction <= 1e-6);
        assert!((out.reward + 0.5 * out.info.cost).abs() <= 1e-6);
    }

    #[test]
    fn step_before_reset_and_after_done() {
        let mut env = env(ShieldMode::FullShield, false);
        assert!(env.step(&Action::new(vec![0.0, 0.0], vec![0.0])).is_err());
        env.reset(0, 1).unwrap();
        assert!(env.step(&Action::new(vec![0.0], vec![0.0])).is_err());
        assert!(env.reset(7, 1).is_err());
    }

    #[test]
    fn baseline_penalty_includes_violation() {
        let mut env = env(ShieldMode::BaselineShield, false);
        let mut obs = env.reset(0, 3).unwrap();
        let mut agent = agents::GreedyAgent;
        for _ in 0..30 {
            let out = env.step(&agent.act(&obs, &env.cfg.grid)).unwrap();
            let i = &out.info;
            assert!((i.penalty - (i.correction + i.violation.max(0.0))).abs() < 1e-15);
            obs = out.obs;
        }
    }
}
