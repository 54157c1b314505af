//! Linear and quadratic programming contracts.
//!
//! Everything above this module only sees [`solve_lp`] and [`solve_qp`] and
//! their tolerances. Internally both are reduced to one bounded standard form
//! and handed to a sparse primal–dual interior-point method; infeasibility is
//! classified afterwards with an elastic (L1) feasibility program.

mod ipm;
pub mod sparse;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use ipm::{IpmTolerances, Status, StdProblem};
use sparse::CscMatrix;

/// Feasibility/KKT tolerance shared by all set queries.
pub const DEFAULT_TOL_FEAS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol_feas: f64,
    /// Target average complementarity, relative to `1 + |objective|`.
    pub tol_gap: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_feas: DEFAULT_TOL_FEAS,
            tol_gap: 1e-15,
            max_iter: 150,
        }
    }
}

impl SolverSettings {
    fn ipm(&self) -> IpmTolerances {
        IpmTolerances {
            primal: 1e-3 * self.tol_feas,
            dual: 1e-3 * self.tol_feas,
            gap: self.tol_gap,
            accept_primal: 0.1 * self.tol_feas,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("solver did not converge after {iterations} iterations (primal residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

/// `maximize objᵀx  s.t.  eq_lhs x = eq_rhs,  ineq_lhs x ≤ ineq_rhs,  bounds`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: DVector<f64>,
    pub eq_lhs: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_lhs: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl LinearProgram {
    pub fn new(objective: DVector<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            eq_lhs: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_lhs: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
            bounds: None,
        }
    }

    pub fn with_eq(mut self, lhs: DMatrix<f64>, rhs: DVector<f64>) -> Self {
        self.eq_lhs = lhs;
        self.eq_rhs = rhs;
        self
    }

    pub fn with_ineq(mut self, lhs: DMatrix<f64>, rhs: DVector<f64>) -> Self {
        self.ineq_lhs = lhs;
        self.ineq_rhs = rhs;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { x: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// `minimize ‖target − map·x‖²  s.t.  eq_lhs x = eq_rhs,  ineq_lhs x ≤ ineq_rhs,  bounds`.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub target: DVector<f64>,
    pub map: DMatrix<f64>,
    pub eq_lhs: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_lhs: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    /// Simple variable bounds; singleton rows of `ineq_lhs` are folded in here anyway.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl QuadraticProgram {
    pub fn new(target: DVector<f64>, map: DMatrix<f64>) -> Self {
        let n = map.ncols();
        QuadraticProgram {
            target,
            map,
            eq_lhs: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_lhs: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
            bounds: None,
        }
    }

    pub fn with_eq(mut self, lhs: DMatrix<f64>, rhs: DVector<f64>) -> Self {
        self.eq_lhs = lhs;
        self.eq_rhs = rhs;
        self
    }

    pub fn with_ineq(mut self, lhs: DMatrix<f64>, rhs: DVector<f64>) -> Self {
        self.ineq_lhs = lhs;
        self.ineq_rhs = rhs;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.map.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpSolution {
    Optimal { x: DVector<f64>, distance: f64 },
    Infeasible,
}

pub fn solve_lp(lp: &LinearProgram, settings: &SolverSettings) -> Result<LpSolution, SolverError> {
    let n = lp.objective.len();
    check_dims(n, &lp.eq_lhs, &lp.eq_rhs, &lp.ineq_lhs, &lp.ineq_rhs, lp.bounds.as_ref())?;
    let reduced = match Presolved::build(
        n,
        lp.bounds.as_ref(),
        &lp.eq_lhs,
        &lp.eq_rhs,
        &lp.ineq_lhs,
        &lp.ineq_rhs,
        settings.tol_feas,
    ) {
        Some(r) => r,
        None => return Ok(LpSolution::Infeasible),
    };
    let c: Vec<f64> = reduced
        .kept
        .iter()
        .map(|&j| -lp.objective[j])
        .chain(std::iter::repeat_n(0.0, reduced.num_slacks))
        .collect();
    let q = vec![0.0; c.len()];
    let prob = reduced.problem(c, q, None);
    let res = ipm::solve(&prob, &settings.ipm());
    match res.status {
        Status::Converged | Status::Acceptable if res.primal_res <= settings.tol_feas => {
            let x = reduced.expand(&res.x);
            let value = lp.objective.dot(&x);
            Ok(LpSolution::Optimal { x, value })
        }
        _ => {
            if elastic_infeasibility(&prob, settings)? > settings.tol_feas {
                Ok(LpSolution::Infeasible)
            } else if res.status == Status::Diverged {
                Ok(LpSolution::Unbounded)
            } else {
                Err(SolverError::NotConverged {
                    iterations: res.iterations,
                    residual: res.primal_res,
                })
            }
        }
    }
}

pub fn solve_qp(qp: &QuadraticProgram, settings: &SolverSettings) -> Result<QpSolution, SolverError> {
    let n = qp.map.ncols();
    if qp.target.len() != qp.map.nrows() {
        return Err(SolverError::Malformed(format!(
            "target has length {} but map has {} rows",
            qp.target.len(),
            qp.map.nrows()
        )));
    }
    check_dims(n, &qp.eq_lhs, &qp.eq_rhs, &qp.ineq_lhs, &qp.ineq_rhs, qp.bounds.as_ref())?;
    let reduced = match Presolved::build(
        n,
        qp.bounds.as_ref(),
        &qp.eq_lhs,
        &qp.eq_rhs,
        &qp.ineq_lhs,
        &qp.ineq_rhs,
        settings.tol_feas,
    ) {
        Some(r) => r,
        None => return Ok(QpSolution::Infeasible),
    };
    // residual variables r = map·x turn the Gram objective into a diagonal one:
    // ‖a − r‖² = rᵀr − 2aᵀr + const
    let k = qp.target.len();
    let nv = reduced.kept.len() + reduced.num_slacks;
    let mut c = vec![0.0; nv];
    let mut q = vec![0.0; nv];
    c.extend(qp.target.iter().map(|a| -2.0 * a));
    q.extend(std::iter::repeat_n(2.0, k));
    let prob = reduced.problem(c, q, Some(&qp.map));
    let res = ipm::solve(&prob, &settings.ipm());
    match res.status {
        Status::Converged | Status::Acceptable if res.primal_res <= settings.tol_feas => {
            let x = reduced.expand(&res.x);
            let distance = (&qp.target - &qp.map * &x).norm();
            Ok(QpSolution::Optimal { x, distance })
        }
        _ => {
            if elastic_infeasibility(&prob, settings)? > settings.tol_feas {
                Ok(QpSolution::Infeasible)
            } else {
                Err(SolverError::NotConverged {
                    iterations: res.iterations,
                    residual: res.primal_res,
                })
            }
        }
    }
}

fn check_dims(
    n: usize,
    eq_lhs: &DMatrix<f64>,
    eq_rhs: &DVector<f64>,
    ineq_lhs: &DMatrix<f64>,
    ineq_rhs: &DVector<f64>,
    bounds: Option<&Vec<(f64, f64)>>,
) -> Result<(), SolverError> {
    let bad = |what: &str| Err(SolverError::Malformed(what.to_string()));
    if eq_lhs.ncols() != n && eq_lhs.nrows() > 0 {
        return bad("equality matrix column count");
    }
    if eq_lhs.nrows() != eq_rhs.len() {
        return bad("equality row count");
    }
    if ineq_lhs.ncols() != n && ineq_lhs.nrows() > 0 {
        return bad("inequality matrix column count");
    }
    if ineq_lhs.nrows() != ineq_rhs.len() {
        return bad("inequality row count");
    }
    if let Some(b) = bounds {
        if b.len() != n {
            return bad("bounds length");
        }
        if b.iter().any(|(l, u)| l.is_nan() || u.is_nan()) {
            return bad("NaN bound");
        }
    }
    Ok(())
}

/// Bounded standard form after folding singleton rows into bounds,
/// removing fixed variables and adding slacks for general inequalities.
struct Presolved {
    n_orig: usize,
    kept: Vec<usize>,
    fixed: Vec<(usize, f64)>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    num_slacks: usize,
}

impl Presolved {
    fn build(
        n: usize,
        bounds: Option<&Vec<(f64, f64)>>,
        eq_lhs: &DMatrix<f64>,
        eq_rhs: &DVector<f64>,
        ineq_lhs: &DMatrix<f64>,
        ineq_rhs: &DVector<f64>,
        tol: f64,
    ) -> Option<Self> {
        let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = match bounds {
            Some(b) => b.iter().copied().unzip(),
            None => (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]),
        };
        let mut general: Vec<usize> = Vec::new();
        for i in 0..ineq_lhs.nrows() {
            let row = ineq_lhs.row(i);
            let nz: Vec<usize> = (0..n).filter(|&j| row[j] != 0.0).collect();
            match nz.len() {
                0 => {
                    if ineq_rhs[i] < -tol {
                        return None;
                    }
                }
                1 => {
                    let j = nz[0];
                    let bound = ineq_rhs[i] / row[j];
                    if row[j] > 0.0 {
                        hi[j] = hi[j].min(bound);
                    } else {
                        lo[j] = lo[j].max(bound);
                    }
                }
                _ => general.push(i),
            }
        }
        let mut kept = Vec::with_capacity(n);
        let mut fixed = Vec::new();
        for j in 0..n {
            if lo[j] > hi[j] + tol {
                return None;
            }
            let scale = 1.0 + lo[j].abs().max(hi[j].abs());
            if lo[j].is_finite() && hi[j].is_finite() && hi[j] - lo[j] <= 1e-14 * scale {
                fixed.push((j, 0.5 * (lo[j] + hi[j])));
            } else {
                kept.push(j);
            }
        }
        let mut col_of = vec![usize::MAX; n];
        for (new, &j) in kept.iter().enumerate() {
            col_of[j] = new;
        }
        let fixed_val: Vec<Option<f64>> = {
            let mut v = vec![None; n];
            for &(j, x) in &fixed {
                v[j] = Some(x);
            }
            v
        };
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for i in 0..eq_lhs.nrows() {
            let row = eq_lhs.row(i);
            let (entries, r) = reduce_row((0..n).map(|j| (j, row[j])), eq_rhs[i], &fixed_val, &col_of);
            if entries.is_empty() {
                if r.abs() > tol {
                    return None;
                }
                continue;
            }
            rows.push(entries);
            rhs.push(r);
        }
        let mut slack_rows = Vec::new();
        for &i in &general {
            let row = ineq_lhs.row(i);
            let (entries, r) = reduce_row((0..n).map(|j| (j, row[j])), ineq_rhs[i], &fixed_val, &col_of);
            if entries.is_empty() {
                if r < -tol {
                    return None;
                }
                continue;
            }
            rows.push(entries);
            rhs.push(r);
            slack_rows.push(rows.len() - 1);
        }
        let base = kept.len();
        for (s, &r) in slack_rows.iter().enumerate() {
            rows[r].push((base + s, 1.0));
        }
        let mut lo_k: Vec<f64> = kept.iter().map(|&j| lo[j]).collect();
        let mut hi_k: Vec<f64> = kept.iter().map(|&j| hi[j]).collect();
        lo_k.extend(std::iter::repeat_n(0.0, slack_rows.len()));
        hi_k.extend(std::iter::repeat_n(f64::INFINITY, slack_rows.len()));
        Some(Presolved {
            n_orig: n,
            kept,
            fixed,
            lo: lo_k,
            hi: hi_k,
            rows,
            rhs,
            num_slacks: slack_rows.len(),
        })
    }

    /// Assembles the standard-form problem. With `map`, appends free
    /// residual variables `r` and rows `map·x − r = 0`.
    fn problem(&self, c: Vec<f64>, q: Vec<f64>, map: Option<&DMatrix<f64>>) -> StdProblem {
        let nv = self.kept.len() + self.num_slacks;
        let k = map.map_or(0, |m| m.nrows());
        let m_rows = self.rows.len() + k;
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv + k];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                columns[j].push((i, v));
            }
        }
        let mut b = self.rhs.clone();
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        if let Some(map) = map {
            let base = self.rows.len();
            let mut shift = vec![0.0; k];
            for &(j, x) in &self.fixed {
                for i in 0..k {
                    shift[i] += map[(i, j)] * x;
                }
            }
            for (new, &j) in self.kept.iter().enumerate() {
                for i in 0..k {
                    let v = map[(i, j)];
                    if v != 0.0 {
                        columns[new].push((base + i, v));
                    }
                }
            }
            for i in 0..k {
                columns[nv + i].push((base + i, -1.0));
                b.push(-shift[i]);
            }
            lo.extend(std::iter::repeat_n(f64::NEG_INFINITY, k));
            hi.extend(std::iter::repeat_n(f64::INFINITY, k));
        }
        StdProblem {
            a: CscMatrix::from_columns(m_rows, columns),
            b,
            c,
            q,
            lo,
            hi,
        }
    }

    fn expand(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_orig);
        for (new, &j) in self.kept.iter().enumerate() {
            out[j] = x[new].clamp(self.lo[new], self.hi[new]);
        }
        for &(j, v) in &self.fixed {
            out[j] = v;
        }
        out
    }
}

fn reduce_row(
    coeffs: impl Iterator<Item = (usize, f64)>,
    mut rhs: f64,
    fixed_val: &[Option<f64>],
    col_of: &[usize],
) -> (Vec<(usize, f64)>, f64) {
    let mut entries = Vec::new();
    for (j, v) in coeffs {
        if v == 0.0 {
            continue;
        }
        match fixed_val[j] {
            Some(x) => rhs -= v * x,
            None => entries.push((col_of[j], v)),
        }
    }
    (entries, rhs)
}

/// Minimum of `Σ|b − A x|` over the bounds of `prob`.
fn elastic_infeasibility(prob: &StdProblem, settings: &SolverSettings) -> Result<f64, SolverError> {
    let n = prob.c.len();
    let m = prob.b.len();
    let mut columns: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|j| {
            let (r, v) = prob.a.column(j);
            r.iter().copied().zip(v.iter().copied()).collect()
        })
        .collect();
    for i in 0..m {
        columns.push(vec![(i, 1.0)]);
        columns.push(vec![(i, -1.0)]);
    }
    let mut c = vec![0.0; n];
    c.extend(std::iter::repeat_n(1.0, 2 * m));
    let mut lo = prob.lo.clone();
    let mut hi = prob.hi.clone();
    lo.extend(std::iter::repeat_n(0.0, 2 * m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, 2 * m));
    // free variables are boxed generously so the elastic program stays bounded
    for j in 0..n {
        if !lo[j].is_finite() {
            lo[j] = -1e9;
        }
        if !hi[j].is_finite() {
            hi[j] = 1e9;
        }
    }
    let elastic = StdProblem {
        a: CscMatrix::from_columns(m, columns),
        b: prob.b.clone(),
        q: vec![0.0; c.len()],
        c,
        lo,
        hi,
    };
    let res = ipm::solve(&elastic, &settings.ipm());
    match res.status {
        Status::Converged | Status::Acceptable => Ok(res.x[n..].iter().map(|v| v.max(0.0)).sum()),
        _ => Err(SolverError::NotConverged {
            iterations: res.iterations,
            residual: res.primal_res,
        }),
    }
}

/// Minimum L1 violation of `eq_lhs x = eq_rhs` over the box `bounds`.
/// Zero (to solver precision) iff the system is feasible.
pub fn min_infeasibility(
    eq_lhs: &DMatrix<f64>,
    eq_rhs: &DVector<f64>,
    bounds: &[(f64, f64)],
    settings: &SolverSettings,
) -> Result<f64, SolverError> {
    let n = bounds.len();
    check_dims(
        n,
        eq_lhs,
        eq_rhs,
        &DMatrix::zeros(0, n),
        &DVector::zeros(0),
        Some(&bounds.to_vec()),
    )?;
    let m = eq_lhs.nrows();
    let mut columns: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|j| {
            eq_lhs
                .column(j)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect()
        })
        .collect();
    for i in 0..m {
        columns.push(vec![(i, 1.0)]);
        columns.push(vec![(i, -1.0)]);
    }
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = bounds.iter().copied().unzip();
    if lo.iter().zip(&hi).any(|(l, u)| l > u) {
        return Ok(f64::INFINITY);
    }
    // degenerate boxes are widened by a hair; the elastic slacks absorb it
    for j in 0..n {
        if hi[j] - lo[j] < 1e-13 {
            let mid = 0.5 * (lo[j] + hi[j]);
            lo[j] = mid - 5e-14;
            hi[j] = mid + 5e-14;
        }
    }
    lo.extend(std::iter::repeat_n(0.0, 2 * m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, 2 * m));
    let mut c = vec![0.0; n];
    c.extend(std::iter::repeat_n(1.0, 2 * m));
    let prob = StdProblem {
        a: CscMatrix::from_columns(m, columns),
        b: eq_rhs.iter().copied().collect(),
        q: vec![0.0; c.len()],
        c,
        lo,
        hi,
    };
    let res = ipm::solve(&prob, &settings.ipm());
    match res.status {
        Status::Converged | Status::Acceptable => Ok(res.x[n..].iter().map(|v| v.max(0.0)).sum()),
        _ => Err(SolverError::NotConverged {
            iterations: res.iterations,
            residual: res.primal_res,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> SolverSettings {
        SolverSettings::default()
    }

    fn optimal(sol: LpSolution) -> (DVector<f64>, f64) {
        match sol {
            LpSolution::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn lp_half_line() {
        let lp = LinearProgram::new(DVector::from_element(1, 1.0)).with_ineq(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_row_slice(&[2.0, 0.0]),
        );
        let (x, v) = optimal(solve_lp(&lp, &s()).unwrap());
        assert!((x[0] - 2.0).abs() < 1e-8);
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn lp_contradictory_bounds_infeasible() {
        let lp = LinearProgram::new(DVector::from_element(1, 1.0)).with_ineq(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_row_slice(&[0.0, -1.0]),
        );
        assert_eq!(solve_lp(&lp, &s()).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn lp_unit_box() {
        let lp = LinearProgram::new(DVector::from_row_slice(&[1.0, 1.0]))
            .with_bounds(vec![(0.0, 1.0), (0.0, 1.0)]);
        let (_, v) = optimal(solve_lp(&lp, &s()).unwrap());
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn lp_infeasible_equalities() {
        // x + y = 3 over [0,1]²
        let lp = LinearProgram::new(DVector::from_row_slice(&[1.0, 0.0]))
            .with_eq(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 3.0))
            .with_bounds(vec![(0.0, 1.0), (0.0, 1.0)]);
        assert_eq!(solve_lp(&lp, &s()).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn lp_unbounded_ray() {
        let lp = LinearProgram::new(DVector::from_element(1, 1.0))
            .with_ineq(DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, 0.0));
        assert_eq!(solve_lp(&lp, &s()).unwrap(), LpSolution::Unbounded);
    }

    #[test]
    fn lp_general_inequality_rows() {
        // max x + 2y s.t. x + y ≤ 4, x − y ≤ 1, x,y ≥ 0  → (0,4), value 8
        let lp = LinearProgram::new(DVector::from_row_slice(&[1.0, 2.0]))
            .with_ineq(
                DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]),
                DVector::from_row_slice(&[4.0, 1.0]),
            )
            .with_bounds(vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)]);
        let (_, v) = optimal(solve_lp(&lp, &s()).unwrap());
        assert!((v - 8.0).abs() < 1e-7);
    }

    #[test]
    fn qp_half_line_projection() {
        let qp = QuadraticProgram::new(DVector::from_element(1, 1.0), DMatrix::identity(1, 1))
            .with_ineq(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 0.0));
        match solve_qp(&qp, &s()).unwrap() {
            QpSolution::Optimal { x, distance } => {
                assert!(x[0].abs() < 1e-7);
                assert!((distance - 1.0).abs() < 1e-7);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn qp_hyperplane_projection() {
        let qp = QuadraticProgram::new(DVector::from_row_slice(&[1.0, 1.0]), DMatrix::identity(2, 2))
            .with_eq(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 0.0));
        match solve_qp(&qp, &s()).unwrap() {
            QpSolution::Optimal { x, distance } => {
                assert!(x[0].abs() < 1e-8 && x[1].abs() < 1e-8, "{x:?}");
                assert!((distance - 2f64.sqrt()).abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn qp_fixed_point_has_zero_distance() {
        let qp = QuadraticProgram::new(DVector::from_row_slice(&[0.3, -0.2]), DMatrix::identity(2, 2))
            .with_bounds(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        match solve_qp(&qp, &s()).unwrap() {
            QpSolution::Optimal { distance, .. } => assert!(distance < 1e-8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn qp_infeasible() {
        let qp = QuadraticProgram::new(DVector::from_element(1, 0.0), DMatrix::identity(1, 1))
            .with_eq(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 2.0))
            .with_bounds(vec![(-1.0, 1.0)]);
        assert_eq!(solve_qp(&qp, &s()).unwrap(), QpSolution::Infeasible);
    }

    #[test]
    fn qp_fixed_variables_are_substituted() {
        // x0 fixed at 0.5 by bounds, minimize ‖(1,1) − x‖ with x0 + x1 = 1
        let qp = QuadraticProgram::new(DVector::from_row_slice(&[1.0, 1.0]), DMatrix::identity(2, 2))
            .with_eq(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 1.0))
            .with_bounds(vec![(0.5, 0.5), (-5.0, 5.0)]);
        match solve_qp(&qp, &s()).unwrap() {
            QpSolution::Optimal { x, .. } => {
                assert_eq!(x[0], 0.5);
                assert!((x[1] - 0.5).abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_dimensions_are_reported() {
        let lp = LinearProgram::new(DVector::from_element(2, 1.0))
            .with_eq(DMatrix::zeros(1, 3), DVector::zeros(1));
        assert!(matches!(solve_lp(&lp, &s()), Err(SolverError::Malformed(_))));
    }

    #[test]
    fn min_infeasibility_detects_gap() {
        let v = min_infeasibility(
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::from_element(1, 2.0),
            &[(-1.0, 1.0)],
            &s(),
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }
}
