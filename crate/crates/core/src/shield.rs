//! Safety layer: projection of a proposed action onto the set of balanced,
//! rate-feasible inputs whose successor state lies in a target set.
//!
//! Storage efficiencies make the true dynamics piecewise linear. The
//! projection therefore works on a split input `[p_discharge; p_charge;
//! p_market]`, which is linear. When the optimizer uses both halves of a
//! storage at once the split model no longer matches the real device, so
//! those storages are re-solved with their branch fixed and the closest
//! branch assignment wins.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::czono::{self, ConstrainedZonotope};
use crate::error::{Error, Result, ShieldDiagnostics};
use crate::gridmodel::{self, GridParams, Mode};
use crate::lpqp::{self, QpSolution, QuadraticProgram, SolverSettings};

/// Simultaneous charge and discharge below this level (kW) is left alone;
/// its effect on the state is far below the feasibility tolerance.
pub const OVERLAP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub p_storage: Vec<f64>,
    pub p_market: Vec<f64>,
}

impl Action {
    pub fn new(p_storage: Vec<f64>, p_market: Vec<f64>) -> Self {
        Action { p_storage, p_market }
    }

    /// Splits a flat `[p_storage; p_market]` vector.
    pub fn from_flat(u: &[f64], n: usize) -> Result<Self> {
        if u.len() < n {
            return Err(Error::Dimension(format!("action of length {} for {n} storages", u.len())));
        }
        Ok(Action {
            p_storage: u[..n].to_vec(),
            p_market: u[n..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.p_storage.iter().chain(&self.p_market).copied().collect()
    }

    pub fn check(&self, params: &GridParams) -> Result<()> {
        if self.p_storage.len() != params.n() || self.p_market.len() != params.m() {
            return Err(Error::Dimension(format!(
                "action has {}+{} entries, grid expects {}+{}",
                self.p_storage.len(),
                self.p_market.len(),
                params.n(),
                params.m()
            )));
        }
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("action entries must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SafeAction {
    pub action: Action,
    /// Euclidean distance between proposed and safe action.
    pub correction: f64,
    /// `[p_discharge; p_charge; p_market]`.
    pub split_input: Vec<f64>,
    /// Wall-clock seconds spent assembling and solving.
    pub shield_time: f64,
}

impl SafeAction {
    /// `min(p_discharge, −p_charge)` per storage; positive means both halves are active.
    pub fn overlap(&self) -> Vec<f64> {
        let n = self.action.p_storage.len();
        (0..n)
            .map(|i| self.split_input[i].min(-self.split_input[n + i]))
            .collect()
    }
}

/// Per-storage constraint on the split input.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Branch {
    Free,
    Fixed(Mode),
}

/// Projects `a` so that the next state lies in `x_safe_next`.
pub fn project_action(
    a: &Action,
    x: &[f64],
    x_safe_next: &ConstrainedZonotope,
    d_t: f64,
    params: &GridParams,
    settings: &SolverSettings,
) -> Result<SafeAction> {
    let start = Instant::now();
    a.check(params)?;
    if x.len() != params.n() || x_safe_next.dim() != params.n() {
        return Err(Error::Dimension(format!(
            "state of length {} and target of dimension {} for {} storages",
            x.len(),
            x_safe_next.dim(),
            params.n()
        )));
    }
    if !d_t.is_finite() {
        return Err(Error::InvalidParams(format!("net load must be finite, got {d_t}")));
    }
    let problem = Projection::new(a, x, x_safe_next, d_t, params);
    let branches = vec![Branch::Free; params.n()];
    match problem.search(&branches, settings)? {
        Some((split, distance)) => {
            let n = params.n();
            let p_storage = (0..n).map(|i| split[i] + split[n + i]).collect();
            let p_market = split[2 * n..].to_vec();
            Ok(SafeAction {
                action: Action { p_storage, p_market },
                correction: distance,
                split_input: split,
                shield_time: start.elapsed().as_secs_f64(),
            })
        }
        None => {
            let hull = czono::interval_hull(x_safe_next, settings).ok();
            Err(Error::ShieldInfeasible(Box::new(ShieldDiagnostics {
                net_load: d_t,
                state: x.to_vec(),
                target_lower: hull.as_ref().map_or_else(Vec::new, |h| h.lower.clone()),
                target_upper: hull.map_or_else(Vec::new, |h| h.upper),
            })))
        }
    }
}

/// Same projection with the admissible charge box as target.
pub fn project_action_baseline(
    a: &Action,
    x: &[f64],
    d_t: f64,
    params: &GridParams,
    settings: &SolverSettings,
) -> Result<SafeAction> {
    let limit = czono::from_interval(&params.charge_box())?;
    project_action(a, x, &limit, d_t, params, settings)
}

/// `min_{z ∈ X_safe} Σz − Σx`; positive when the state is below the safe set.
pub fn safety_violation(x: &[f64], x_safe: &ConstrainedZonotope, settings: &SolverSettings) -> Result<f64> {
    if x.len() != x_safe.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} for a set of dimension {}",
            x.len(),
            x_safe.dim()
        )));
    }
    let down = DVector::from_element(x.len(), -1.0);
    let lowest = -czono::support(x_safe, &down, settings)?;
    Ok(lowest - x.iter().sum::<f64>())
}

/// Pre-assembled QP data shared by every branch assignment.
struct Projection {
    n: usize,
    g: usize,
    target: DVector<f64>,
    map: DMatrix<f64>,
    eq_lhs: DMatrix<f64>,
    eq_rhs: DVector<f64>,
    bounds: Vec<(f64, f64)>,
}

impl Projection {
    /// Decision vector `[β; p_discharge; p_charge; p_market]` with rows
    /// `Gβ − B̃ũ = Ax − c`, `Fβ = b`, `Σũ = −d`.
    fn new(a: &Action, x: &[f64], target_set: &ConstrainedZonotope, d_t: f64, params: &GridParams) -> Self {
        let (n, m) = (params.n(), params.m());
        let g = target_set.num_generators();
        let q = target_set.num_constraints();
        let nu = 2 * n + m;
        let nv = g + nu;
        let b_split = gridmodel::build_b_split(params);
        let a_mat = gridmodel::build_a(params);

        let rows = n + q + 1;
        let mut eq_lhs = DMatrix::zeros(rows, nv);
        let mut eq_rhs = DVector::zeros(rows);
        eq_lhs.view_mut((0, 0), (n, g)).copy_from(target_set.generators());
        eq_lhs.view_mut((0, g), (n, nu)).copy_from(&(-&b_split));
        let ax = &a_mat * DVector::from_row_slice(x);
        eq_rhs.rows_mut(0, n).copy_from(&(ax - target_set.center()));
        eq_lhs.view_mut((n, 0), (q, g)).copy_from(target_set.con_lhs());
        eq_rhs.rows_mut(n, q).copy_from(target_set.con_rhs());
        for j in 0..nu {
            eq_lhs[(n + q, g + j)] = 1.0;
        }
        eq_rhs[n + q] = -d_t;

        let mut map = DMatrix::zeros(n + m, nv);
        for i in 0..n {
            map[(i, g + i)] = 1.0;
            map[(i, g + n + i)] = 1.0;
        }
        for j in 0..m {
            map[(n + j, g + 2 * n + j)] = 1.0;
        }

        let mut bounds = vec![(-1.0, 1.0); g];
        bounds.extend(params.split_input_bounds());
        Projection {
            n,
            g,
            target: DVector::from_vec(a.to_flat()),
            map,
            eq_lhs,
            eq_rhs,
            bounds,
        }
    }

    fn solve(&self, branches: &[Branch], settings: &SolverSettings) -> Result<Option<(Vec<f64>, f64)>> {
        let mut bounds = self.bounds.clone();
        for (i, b) in branches.iter().enumerate() {
            match b {
                Branch::Fixed(Mode::Discharge) => bounds[self.g + self.n + i] = (0.0, 0.0),
                Branch::Fixed(Mode::Charge) => bounds[self.g + i] = (0.0, 0.0),
                Branch::Free => {}
            }
        }
        let qp = QuadraticProgram::new(self.target.clone(), self.map.clone())
            .with_eq(self.eq_lhs.clone(), self.eq_rhs.clone())
            .with_bounds(bounds);
        match lpqp::solve_qp(&qp, settings)? {
            QpSolution::Optimal { x, distance } => Ok(Some((x.as_slice()[self.g..].to_vec(), distance))),
            QpSolution::Infeasible => Ok(None),
        }
    }

    /// Solves the split problem and, where a storage both charges and
    /// discharges, branches on its mode; returns the closest consistent input.
    fn search(&self, branches: &[Branch], settings: &SolverSettings) -> Result<Option<(Vec<f64>, f64)>> {
        let Some((split, distance)) = self.solve(branches, settings)? else {
            return Ok(None);
        };
        let n = self.n;
        let overlapping = (0..n).find(|&i| {
            branches[i] == Branch::Free && split[i].min(-split[n + i]) > OVERLAP_TOL
        });
        let Some(i) = overlapping else {
            return Ok(Some((split, distance)));
        };
        let mut best: Option<(Vec<f64>, f64)> = None;
        for mode in [Mode::Discharge, Mode::Charge] {
            let mut next = branches.to_vec();
            next[i] = Branch::Fixed(mode);
            if let Some(candidate) = self.search(&next, settings)? {
                if best.as_ref().is_none_or(|b| candidate.1 < b.1) {
                    best = Some(candidate);
                }
            }
        }
        Ok(best)
    }
}
