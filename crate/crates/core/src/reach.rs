//! Time-dependent islanding safe sets by backwards reachability.
//!
//! Starting from the admissible charge box, the islanding dynamics are run
//! backwards `H` times; after each step the preimage is intersected with the
//! charge box again, so every set in the sequence holds only states from
//! which some balanced storage-only input keeps the charge admissible until
//! the end of the islanding window.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::czono::{self, ConstrainedZonotope, IntervalBox};
use crate::error::{Error, Result};
use crate::gridmodel::{self, GridParams, Mode};
use crate::lpqp::SolverSettings;

/// Per-step lower bound of the forecast net load over one islanding window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastLowerBound {
    pub d_lower: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SafeSetSequence {
    /// `sets[0]` is the safe set at the window start, `sets[H]` the charge box.
    pub sets: Vec<ConstrainedZonotope>,
    pub forecast_used: ForecastLowerBound,
}

impl SafeSetSequence {
    pub fn first(&self) -> &ConstrainedZonotope {
        &self.sets[0]
    }

    pub fn horizon(&self) -> usize {
        self.sets.len() - 1
    }
}

/// Storage branch used during islanding for a given net-load bound:
/// a surplus (`d ≥ 0`) forces charging, a deficit forces discharging.
pub fn islanding_mode(d_lower: f64) -> Mode {
    if d_lower >= 0.0 {
        Mode::Charge
    } else {
        Mode::Discharge
    }
}

/// Balanced storage-only inputs for one islanding step, as a set over
/// `[p_storage; p_market]` with the market entries pinned to zero.
pub fn islanding_input_set(d_lower_t: f64, params: &GridParams) -> Result<ConstrainedZonotope> {
    if !d_lower_t.is_finite() {
        return Err(Error::InvalidParams(format!("net-load bound must be finite, got {d_lower_t}")));
    }
    let (n, m) = (params.n(), params.m());
    let mode = islanding_mode(d_lower_t);
    let bound: Vec<f64> = params
        .storages
        .iter()
        .map(|s| match mode {
            Mode::Charge => s.p_min,
            Mode::Discharge => s.p_max,
        })
        .chain(std::iter::repeat_n(0.0, m))
        .collect();
    let capability: f64 = bound.iter().sum();
    if d_lower_t.abs() > capability.abs() * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::IllPosed(format!(
            "net load bound {d_lower_t:.6} kW exceeds the storage {} capability of {:.6} kW",
            match mode {
                Mode::Charge => "charging",
                Mode::Discharge => "discharging",
            },
            capability.abs()
        )));
    }
    let half = DVector::from_iterator(n + m, bound.iter().map(|v| 0.5 * v));
    let con_lhs = DMatrix::from_row_slice(1, n + m, half.as_slice());
    let con_rhs = DVector::from_element(1, -d_lower_t - half.sum());
    ConstrainedZonotope::new(half.clone(), DMatrix::from_diagonal(&half), con_lhs, con_rhs)
}

/// Preimage `A⁻¹ (X_next ⊕ (−B) U)` under mode-fixed dynamics.
pub fn one_step_backward(
    x_next: &ConstrainedZonotope,
    u_island: &ConstrainedZonotope,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<ConstrainedZonotope> {
    let k = x_next.dim();
    if a.shape() != (k, k) {
        return Err(Error::Dimension(format!("A is {:?} for a state of dimension {k}", a.shape())));
    }
    if b.nrows() != k || b.ncols() != u_island.dim() {
        return Err(Error::Dimension(format!(
            "B is {:?} for state dimension {k} and input dimension {}",
            b.shape(),
            u_island.dim()
        )));
    }
    let a_inv = DMatrix::from_diagonal(&DVector::from_iterator(k, (0..k).map(|i| 1.0 / a[(i, i)])));
    let pushed = czono::linear_map(&(-b), u_island)?;
    czono::linear_map(&a_inv, &czono::minkowski_sum(x_next, &pushed)?)
}

/// Safe-set sequence for one islanding window. The storage branch at each
/// step follows the sign of that step's net-load bound.
pub fn compute_safe_sets(
    params: &GridParams,
    forecast: &ForecastLowerBound,
    settings: &SolverSettings,
) -> Result<SafeSetSequence> {
    let h = params.islanding_h;
    if forecast.d_lower.len() != h {
        return Err(Error::Dimension(format!(
            "forecast bound has {} steps for an islanding horizon of {h}",
            forecast.d_lower.len()
        )));
    }
    let limit = czono::from_interval(&params.charge_box())?;
    let a = gridmodel::build_a(params);
    let n = params.n();
    let mut sets = vec![limit.clone(); h + 1];
    for t in (0..h).rev() {
        let d = forecast.d_lower[t];
        let u = islanding_input_set(d, params)?;
        let b = gridmodel::build_b(params, &vec![islanding_mode(d); n])?;
        // market inputs never move the state; their zero generators carry no information
        let pre = one_step_backward(&sets[t + 1], &u, &a, &b)?.prune_zero_generators();
        // the charge box goes first so the safe set keeps its two-column generator block
        sets[t] = czono::intersect(&limit, &pre)?;
    }
    if czono::is_empty(&sets[0], settings)? {
        for t in (0..h).rev() {
            if czono::is_empty(&sets[t], settings)? {
                return Err(Error::EmptySafeSet { index: t });
            }
        }
        return Err(Error::EmptySafeSet { index: 0 });
    }
    Ok(SafeSetSequence {
        sets,
        forecast_used: forecast.clone(),
    })
}

/// The safe set at the window start alone, assembled in one pass.
///
/// Produces the same representation as `compute_safe_sets(..).sets[0]`
/// (same column and row order) without materializing the intermediate sets,
/// which is what a receding-horizon simulation needs at every step.
pub fn safe_set_at_start(
    params: &GridParams,
    forecast: &ForecastLowerBound,
    settings: &SolverSettings,
) -> Result<ConstrainedZonotope> {
    let h = params.islanding_h;
    if forecast.d_lower.len() != h {
        return Err(Error::Dimension(format!(
            "forecast bound has {} steps for an islanding horizon of {h}",
            forecast.d_lower.len()
        )));
    }
    let n = params.n();
    let limit = czono::from_interval(&params.charge_box())?;
    let c_l = limit.center();
    let g_l: Vec<f64> = (0..n).map(|i| limit.generators()[(i, i)]).collect();
    let a_inv: Vec<f64> = gridmodel::build_a(params).diagonal().iter().map(|a| 1.0 / a).collect();

    // per step: storages with a non-degenerate input range, their half-ranges and gains
    struct StepInput {
        cols: Vec<(usize, f64)>,
        gain: Vec<f64>,
        rhs: f64,
    }
    let mut steps = Vec::with_capacity(h);
    for &d in &forecast.d_lower {
        let u = islanding_input_set(d, params)?;
        let b = gridmodel::build_b(params, &vec![islanding_mode(d); n])?;
        let cols = (0..n)
            .filter(|&i| u.generators()[(i, i)] != 0.0)
            .map(|i| (i, u.generators()[(i, i)]))
            .collect();
        let gain = (0..n).map(|i| b[(i, i)]).collect();
        steps.push(StepInput {
            cols,
            gain,
            rhs: u.con_rhs()[0],
        });
    }

    // columns: charge-box factors for t = 0..=H, then input factors for t = H-1 down to 0
    let mut u_offset = vec![0; h];
    let mut next = (h + 1) * n;
    for t in (0..h).rev() {
        u_offset[t] = next;
        next += steps[t].cols.len();
    }
    let g = next;
    let q = h * (n + 1);
    let mut generators = DMatrix::zeros(n, g);
    for i in 0..n {
        generators[(i, i)] = g_l[i];
    }
    let mut con_lhs = DMatrix::zeros(q, g);
    let mut con_rhs = DVector::zeros(q);
    let mut row = 0;
    for t in (0..h).rev() {
        let st = &steps[t];
        for (j, &(_, half)) in st.cols.iter().enumerate() {
            con_lhs[(row, u_offset[t] + j)] = half;
        }
        con_rhs[row] = st.rhs;
        row += 1;
        for i in 0..n {
            con_lhs[(row + i, t * n + i)] = g_l[i];
            con_lhs[(row + i, (t + 1) * n + i)] = -(a_inv[i] * g_l[i]);
            // input center: half-range on every storage, zero on markets
            let c_u = st.cols.iter().find(|c| c.0 == i).map_or(0.0, |c| c.1);
            con_rhs[row + i] = a_inv[i] * (c_l[i] + -(st.gain[i] * c_u)) - c_l[i];
        }
        for (j, &(i, half)) in st.cols.iter().enumerate() {
            con_lhs[(row + i, u_offset[t] + j)] = a_inv[i] * (st.gain[i] * half);
        }
        row += n;
    }
    let set = ConstrainedZonotope::new(c_l.clone(), generators, con_lhs, con_rhs)?;
    if czono::is_empty(&set, settings)? {
        // locate the first failing step with the full sequence
        return match compute_safe_sets(params, forecast, settings) {
            Err(e) => Err(e),
            Ok(_) => Err(Error::EmptySafeSet { index: 0 }),
        };
    }
    Ok(set)
}

/// Per-set interval hulls, for reporting.
pub fn sequence_hulls(seq: &SafeSetSequence, settings: &SolverSettings) -> Result<Vec<IntervalBox>> {
    seq.sets.iter().map(|z| czono::interval_hull(z, settings)).collect()
}

/// Concurrent memo of window-start safe sets keyed on the exact forecast bound.
/// A cache belongs to one parameter set; callers must not share it across grids.
#[derive(Debug)]
pub struct SafeSetCache {
    capacity: usize,
    entries: RwLock<HashMap<(String, Vec<u64>), Arc<ConstrainedZonotope>>>,
}

impl Default for SafeSetCache {
    fn default() -> Self {
        Self::new(64)
    }
}

impl SafeSetCache {
    pub fn new(capacity: usize) -> Self {
        SafeSetCache {
            capacity: capacity.max(1),
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_compute(
        &self,
        params: &GridParams,
        forecast: &ForecastLowerBound,
        settings: &SolverSettings,
    ) -> Result<Arc<ConstrainedZonotope>> {
        let grid = serde_json::to_string(params).map_err(Error::Json)?;
        let key = (grid, forecast.d_lower.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
        if let Some(hit) = self.entries.read().get(&key) {
            return Ok(hit.clone());
        }
        let seq = Arc::new(safe_set_at_start(params, forecast, settings)?);
        let mut map = self.entries.write();
        if map.len() >= self.capacity {
            map.clear();
        }
        Ok(map.entry(key).or_insert(seq).clone())
    }
}
