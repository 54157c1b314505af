//! Physical and economic model of the micro grid.
//!
//! Sign convention: power injected into the grid bus is positive. A storage
//! with `p > 0` discharges, `p < 0` charges; a market with `p > 0` imports.
//! Loads enter the net load `d` negatively and generation positively.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::czono::IntervalBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorageParams {
    /// Maximum discharge power (kW, ≥ 0).
    #[serde(rename = "p_bar_B")]
    pub p_max: f64,
    /// Maximum charge power (kW, ≤ 0).
    #[serde(rename = "p_underline_B")]
    pub p_min: f64,
    #[serde(rename = "e_bar_B")]
    pub e_max: f64,
    #[serde(rename = "e_underline_B")]
    pub e_min: f64,
    #[serde(rename = "eta_D")]
    pub eta_d: f64,
    #[serde(rename = "eta_C")]
    pub eta_c: f64,
    /// Self-discharge per hour.
    pub mu: f64,
    /// Degradation cost per kWh throughput.
    pub gamma: f64,
}

impl Default for StorageParams {
    fn default() -> Self {
        StorageParams {
            p_max: 3.5,
            p_min: -3.5,
            e_max: 6.54,
            e_min: 0.34,
            eta_d: 0.98,
            eta_c: 0.98,
            mu: 0.012,
            gamma: 0.15,
        }
    }
}

impl StorageParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.p_max, self.p_min, self.e_max, self.e_min, self.eta_d, self.eta_c, self.mu, self.gamma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("storage parameters must be finite".into()));
        }
        if !(self.p_min <= 0.0 && 0.0 <= self.p_max) {
            return Err(Error::InvalidParams(format!(
                "storage rates must satisfy p_min <= 0 <= p_max (got {} and {})",
                self.p_min, self.p_max
            )));
        }
        if !(0.0 <= self.e_min && self.e_min <= self.e_max) {
            return Err(Error::InvalidParams(format!(
                "storage charge bounds must satisfy 0 <= e_min <= e_max (got {} and {})",
                self.e_min, self.e_max
            )));
        }
        for (name, eta) in [("eta_D", self.eta_d), ("eta_C", self.eta_c)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidParams(format!("{name} must lie in (0, 1], got {eta}")));
            }
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidParams(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketParams {
    /// Import limit (kW, ≥ 0).
    #[serde(rename = "p_bar_M")]
    pub p_max: f64,
    /// Export limit (kW, ≤ 0).
    #[serde(rename = "p_underline_M")]
    pub p_min: f64,
}

impl Default for MarketParams {
    fn default() -> Self {
        MarketParams { p_max: 5.0, p_min: -5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    pub storages: Vec<StorageParams>,
    pub markets: Vec<MarketParams>,
    /// Step length in hours.
    pub tau: f64,
    #[serde(rename = "T")]
    pub horizon_t: usize,
    #[serde(rename = "H")]
    pub islanding_h: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            storages: vec![StorageParams::default(); 2],
            markets: vec![MarketParams::default()],
            tau: 1.0 / 60.0,
            horizon_t: 1440,
            islanding_h: 60,
        }
    }
}

impl GridParams {
    pub fn n(&self) -> usize {
        self.storages.len()
    }

    pub fn m(&self) -> usize {
        self.markets.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.storages.is_empty() {
            return Err(Error::InvalidParams("at least one storage is required".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParams(format!("tau must be positive, got {}", self.tau)));
        }
        if self.islanding_h == 0 {
            return Err(Error::InvalidParams("islanding horizon H must be at least 1".into()));
        }
        if self.horizon_t == 0 {
            return Err(Error::InvalidParams("control horizon T must be at least 1".into()));
        }
        for (i, s) in self.storages.iter().enumerate() {
            s.validate().map_err(|e| Error::InvalidParams(format!("storage {i}: {e}")))?;
        }
        for (i, m) in self.markets.iter().enumerate() {
            if !(m.p_min <= 0.0 && 0.0 <= m.p_max) || !m.p_min.is_finite() || !m.p_max.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "market {i}: limits must satisfy p_min <= 0 <= p_max"
                )));
            }
        }
        for s in &self.storages {
            if s.mu * self.tau >= 1.0 {
                return Err(Error::InvalidParams("mu * tau must be below 1 so A stays invertible".into()));
            }
        }
        Ok(())
    }

    /// Admissible charge box `[e_min, e_max]`.
    pub fn charge_box(&self) -> IntervalBox {
        IntervalBox {
            lower: self.storages.iter().map(|s| s.e_min).collect(),
            upper: self.storages.iter().map(|s| s.e_max).collect(),
        }
    }

    /// Rate box of the input `[p_storage; p_market]`.
    pub fn input_box(&self) -> IntervalBox {
        IntervalBox {
            lower: self
                .storages
                .iter()
                .map(|s| s.p_min)
                .chain(self.markets.iter().map(|m| m.p_min))
                .collect(),
            upper: self
                .storages
                .iter()
                .map(|s| s.p_max)
                .chain(self.markets.iter().map(|m| m.p_max))
                .collect(),
        }
    }

    /// Rate box of the split input `[p_discharge; p_charge; p_market]`.
    pub fn split_input_bounds(&self) -> Vec<(f64, f64)> {
        self.storages
            .iter()
            .map(|s| (0.0, s.p_max))
            .chain(self.storages.iter().map(|s| (s.p_min, 0.0)))
            .chain(self.markets.iter().map(|m| (m.p_min, m.p_max)))
            .collect()
    }
}

/// Operating branch of a storage for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Discharge,
    Charge,
}

impl Mode {
    /// Branch taken by a power set-point; zero counts as discharging.
    pub fn of_power(p: f64) -> Self {
        if p >= 0.0 {
            Mode::Discharge
        } else {
            Mode::Charge
        }
    }
}

impl TryFrom<i32> for Mode {
    type Error = Error;

    fn try_from(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Mode::Discharge),
            -1 => Ok(Mode::Charge),
            other => Err(Error::InvalidParams(format!("mode must be +1 or -1, got {other}"))),
        }
    }
}

pub fn build_a(params: &GridParams) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        params.n(),
        params.storages.iter().map(|s| 1.0 - s.mu * params.tau),
    ))
}

fn storage_gain(s: &StorageParams, tau: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Discharge => -tau / s.eta_d,
        Mode::Charge => -tau * s.eta_c,
    }
}

/// Mode-fixed input matrix `[B^B 0]` of size n×(n+m).
pub fn build_b(params: &GridParams, modes: &[Mode]) -> Result<DMatrix<f64>> {
    let n = params.n();
    if modes.len() != n {
        return Err(Error::Dimension(format!("{} modes for {n} storages", modes.len())));
    }
    let mut b = DMatrix::zeros(n, n + params.m());
    for (i, (s, &mode)) in params.storages.iter().zip(modes).enumerate() {
        b[(i, i)] = storage_gain(s, params.tau, mode);
    }
    Ok(b)
}

/// Split-input matrix `[B^BD B^BC 0]` of size n×(2n+m).
pub fn build_b_split(params: &GridParams) -> DMatrix<f64> {
    let n = params.n();
    let mut b = DMatrix::zeros(n, 2 * n + params.m());
    for (i, s) in params.storages.iter().enumerate() {
        b[(i, i)] = storage_gain(s, params.tau, Mode::Discharge);
        b[(i, n + i)] = storage_gain(s, params.tau, Mode::Charge);
    }
    b
}

/// Inequality system `W ũ ≤ w` over the split input, (4n+2m)×(2n+m).
pub fn build_rate_polytope(params: &GridParams) -> (DMatrix<f64>, DVector<f64>) {
    let bounds = params.split_input_bounds();
    let k = bounds.len();
    let mut w_mat = DMatrix::zeros(2 * k, k);
    let mut w_vec = DVector::zeros(2 * k);
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        w_mat[(2 * j, j)] = 1.0;
        w_vec[2 * j] = hi;
        w_mat[(2 * j + 1, j)] = -1.0;
        w_vec[2 * j + 1] = -lo;
    }
    (w_mat, w_vec)
}

/// `h·u + d`, with market entries masked during islanding. Zero means balanced.
pub fn balance_residual(u: &[f64], d: f64, islanding: bool, n_storages: usize) -> f64 {
    let injected: f64 = if islanding {
        u.iter().take(n_storages).sum()
    } else {
        u.iter().sum()
    };
    injected + d
}

pub fn storage_cost(p: f64, params: &StorageParams, tau: f64) -> f64 {
    tau * params.gamma * p.abs()
}

pub fn market_cost(p: f64, price_buy: f64, price_sell: f64, tau: f64) -> f64 {
    if p >= 0.0 {
        tau * price_buy * p
    } else {
        tau * (-price_sell * p)
    }
}

/// Total one-step cost of an input `[p_storage; p_market]`.
pub fn step_cost(u: &[f64], price_buy: f64, price_sell: f64, params: &GridParams) -> f64 {
    let n = params.n();
    let storage: f64 = params
        .storages
        .iter()
        .zip(u)
        .map(|(s, &p)| storage_cost(p, s, params.tau))
        .sum();
    let market: f64 = u[n..]
        .iter()
        .map(|&p| market_cost(p, price_buy, price_sell, params.tau))
        .sum();
    storage + market
}

/// True (piecewise) storage dynamics. Bounds are not enforced here.
pub fn step_dynamics(e: &[f64], u: &[f64], params: &GridParams) -> Vec<f64> {
    params
        .storages
        .iter()
        .zip(e)
        .zip(u)
        .map(|((s, &ei), &p)| {
            let eta = if p >= 0.0 { 1.0 / s.eta_d } else { s.eta_c };
            ei - params.tau * eta * p - params.tau * s.mu * ei
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn single(s: StorageParams, m: usize, tau: f64) -> GridParams {
        GridParams {
            storages: vec![s],
            markets: vec![MarketParams::default(); m],
            tau,
            horizon_t: 1440,
            islanding_h: 60,
        }
    }

    #[test]
    fn a_matrix() {
        let p = GridParams::default();
        let a = build_a(&p);
        assert!(close(a[(0, 0)], 0.9998, 1e-12));
        assert!(close(a[(1, 1)], 0.9998, 1e-12));
        assert_eq!(a[(0, 1)], 0.0);
        let lossless = single(StorageParams { mu: 0.0, ..Default::default() }, 0, 1.0 / 60.0);
        assert_eq!(build_a(&lossless), DMatrix::identity(1, 1));
    }

    #[test]
    fn b_matrix_modes() {
        let p = GridParams::default();
        let b = build_b(&p, &[Mode::Discharge, Mode::Charge]).unwrap();
        assert!(close(b[(0, 0)], -0.017007, 1e-6));
        assert!(close(b[(1, 1)], -0.016333, 1e-6));
        assert_eq!(b.ncols(), 3);
        assert!(b.column(2).iter().all(|&v| v == 0.0));
        assert!(Mode::try_from(0).is_err());
        assert!(build_b(&p, &[Mode::Charge]).is_err());

        let unit = single(
            StorageParams { eta_d: 1.0, eta_c: 1.0, ..Default::default() },
            0,
            1.0,
        );
        assert_eq!(build_b(&unit, &[Mode::Discharge]).unwrap()[(0, 0)], -1.0);
        assert_eq!(build_b(&unit, &[Mode::Charge]).unwrap()[(0, 0)], -1.0);
    }

    #[test]
    fn split_b_and_rate_polytope() {
        let p = GridParams::default();
        let b = build_b_split(&p);
        assert_eq!(b.shape(), (2, 5));
        assert!(close(b[(0, 0)], -0.017007, 1e-6));
        assert!(close(b[(0, 2)], -0.016333, 1e-6));

        let (w, wv) = build_rate_polytope(&p);
        assert_eq!(w.shape(), (4 * 2 + 2, 5));
        let inside = |u: &[f64]| {
            let r = &w * DVector::from_row_slice(u) - &wv;
            r.iter().all(|&v| v <= 1e-12)
        };
        assert!(inside(&[0.0; 5]));

        let one = single(StorageParams::default(), 1, 1.0 / 60.0);
        let (w, wv) = build_rate_polytope(&one);
        let inside = |u: &[f64]| {
            let r = &w * DVector::from_row_slice(u) - &wv;
            r.iter().all(|&v| v <= 1e-12)
        };
        assert!(inside(&[3.5, -3.5, 5.0]));
        assert!(!inside(&[3.6, 0.0, 0.0]));

        let two = single(StorageParams { p_max: 2.0, p_min: -2.0, ..Default::default() }, 0, 1.0);
        let (w, wv) = build_rate_polytope(&two);
        let inside = |u: &[f64]| {
            let r = &w * DVector::from_row_slice(u) - &wv;
            r.iter().all(|&v| v <= 1e-12)
        };
        assert!(inside(&[2.0, -2.0]) && inside(&[0.0, 0.0]));
        assert!(!inside(&[-0.1, 0.0]) && !inside(&[0.0, 0.1]) && !inside(&[2.1, 0.0]));
    }

    #[test]
    fn balance() {
        assert_eq!(balance_residual(&[1.0, -1.0], 0.0, false, 1), 0.0);
        assert_eq!(balance_residual(&[1.0, -1.0], 0.0, true, 1), 1.0);
        assert_eq!(balance_residual(&[2.0, 1.0], -3.0, false, 1), 0.0);
    }

    #[test]
    fn costs() {
        let s = StorageParams::default();
        let tau = 1.0 / 60.0;
        assert!(close(storage_cost(3.0, &s, tau), 0.0075, 1e-9));
        assert_eq!(storage_cost(0.0, &s, tau), 0.0);
        assert_eq!(storage_cost(-3.0, &s, tau), storage_cost(3.0, &s, tau));
        assert!(close(market_cost(2.0, 0.30, 0.06, tau), 0.01, 1e-9));
        assert!(close(market_cost(-2.0, 0.30, 0.06, tau), 0.002, 1e-9));
        assert_eq!(market_cost(0.0, 0.30, 0.06, tau), 0.0);
    }

    #[test]
    fn dynamics_examples() {
        let p = single(StorageParams::default(), 1, 1.0 / 60.0);
        let e = step_dynamics(&[5.0], &[1.0, 0.0], &p);
        assert!(close(e[0], 5.0 - (1.0 / 60.0) / 0.98 - 0.001, 1e-12));
        assert!(close(e[0], 4.981993, 1e-6));

        let still = single(StorageParams { mu: 0.0, ..Default::default() }, 0, 1.0 / 60.0);
        assert_eq!(step_dynamics(&[5.0], &[0.0], &still), vec![5.0]);

        let unit = single(StorageParams { mu: 0.0, eta_c: 0.98, ..Default::default() }, 0, 1.0);
        assert!(close(step_dynamics(&[5.0], &[-1.0], &unit)[0], 5.98, 1e-12));
    }

    #[test]
    fn validation() {
        assert!(GridParams::default().validate().is_ok());
        let mut p = GridParams::default();
        p.storages[0].eta_d = 0.0;
        assert!(p.validate().is_err());
        let mut p = GridParams::default();
        p.storages.clear();
        assert!(p.validate().is_err());
        let mut p = GridParams::default();
        p.markets[0].p_min = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn serde_uses_symbol_names() {
        let text = serde_json::to_string(&StorageParams::default()).unwrap();
        assert!(text.contains("\"p_bar_B\":3.5") && text.contains("\"eta_C\":0.98"));
        let g: GridParams = serde_json::from_str(&serde_json::to_string(&GridParams::default()).unwrap()).unwrap();
        assert_eq!(g, GridParams::default());
    }
}
