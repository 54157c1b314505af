//! Constrained zonotopes `{c + Gβ : ‖β‖∞ ≤ 1, Fβ = b}`.
//!
//! The set operations are purely structural (block concatenation) and exact;
//! every query that needs to look inside the set goes through a linear
//! program over the factor box. Representations are not unique, so equality
//! of two sets is only ever judged through support functions or hulls.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lpqp::{self, LinearProgram, LpSolution, SolverSettings};

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "interval bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidParams(format!(
                "interval axis {i}: lower {} exceeds upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(IntervalBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// True if `other` lies inside `self` up to `tol` per axis.
    pub fn encloses(&self, other: &IntervalBox, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| self.lower[i] <= other.lower[i] + tol && other.upper[i] <= self.upper[i] + tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedZonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
    con_lhs: DMatrix<f64>,
    con_rhs: DVector<f64>,
}

impl ConstrainedZonotope {
    pub fn new(
        center: DVector<f64>,
        generators: DMatrix<f64>,
        con_lhs: DMatrix<f64>,
        con_rhs: DVector<f64>,
    ) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::Dimension(format!(
                "generator matrix has {} rows for a center of length {}",
                generators.nrows(),
                center.len()
            )));
        }
        if con_lhs.nrows() != con_rhs.len() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} rows but {} right-hand sides",
                con_lhs.nrows(),
                con_rhs.len()
            )));
        }
        if con_lhs.nrows() > 0 && con_lhs.ncols() != generators.ncols() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} columns for {} generators",
                con_lhs.ncols(),
                generators.ncols()
            )));
        }
        let g = generators.ncols();
        let con_lhs = if con_lhs.nrows() == 0 { DMatrix::zeros(0, g) } else { con_lhs };
        Ok(ConstrainedZonotope {
            center,
            generators,
            con_lhs,
            con_rhs,
        })
    }

    /// Unconstrained zonotope `{c + Gβ}`.
    pub fn zonotope(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        let g = generators.ncols();
        Self::new(center, generators, DMatrix::zeros(0, g), DVector::zeros(0))
    }

    pub fn point(p: DVector<f64>) -> Self {
        let k = p.len();
        ConstrainedZonotope {
            center: p,
            generators: DMatrix::zeros(k, 0),
            con_lhs: DMatrix::zeros(0, 0),
            con_rhs: DVector::zeros(0),
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn con_lhs(&self) -> &DMatrix<f64> {
        &self.con_lhs
    }

    pub fn con_rhs(&self) -> &DVector<f64> {
        &self.con_rhs
    }

    /// State dimension `k`.
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Generator count `g`.
    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    /// Constraint count `q`.
    pub fn num_constraints(&self) -> usize {
        self.con_rhs.len()
    }

    fn factor_box(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); self.num_generators()]
    }

    /// Drops generators whose column is zero in both `G` and `F`.
    /// The set is unchanged; this is an explicit cleanup, never applied implicitly.
    pub fn prune_zero_generators(&self) -> Self {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&j| {
                self.generators.column(j).iter().any(|&v| v != 0.0)
                    || self.con_lhs.column(j).iter().any(|&v| v != 0.0)
            })
            .collect();
        ConstrainedZonotope {
            center: self.center.clone(),
            generators: self.generators.select_columns(&keep),
            con_lhs: self.con_lhs.select_columns(&keep),
            con_rhs: self.con_rhs.clone(),
        }
    }
}

/// Box → zonotope with center at the midpoint and the half-widths on the diagonal.
pub fn from_interval(b: &IntervalBox) -> Result<ConstrainedZonotope> {
    if b.lower.len() != b.upper.len() {
        return Err(Error::Dimension(format!(
            "interval bounds have lengths {} and {}",
            b.lower.len(),
            b.upper.len()
        )));
    }
    let k = b.lower.len();
    let half = DVector::from_iterator(k, (0..k).map(|i| 0.5 * (b.upper[i] - b.lower[i])));
    let center = DVector::from_iterator(k, (0..k).map(|i| b.lower[i] + half[i]));
    ConstrainedZonotope::zonotope(center, DMatrix::from_diagonal(&half))
}

pub fn linear_map(m: &DMatrix<f64>, z: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    if m.ncols() != z.dim() {
        return Err(Error::Dimension(format!(
            "map has {} columns, set has dimension {}",
            m.ncols(),
            z.dim()
        )));
    }
    Ok(ConstrainedZonotope {
        center: m * &z.center,
        generators: m * &z.generators,
        con_lhs: z.con_lhs.clone(),
        con_rhs: z.con_rhs.clone(),
    })
}

pub fn minkowski_sum(z1: &ConstrainedZonotope, z2: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    if z1.dim() != z2.dim() {
        return Err(Error::Dimension(format!(
            "Minkowski sum of dimensions {} and {}",
            z1.dim(),
            z2.dim()
        )));
    }
    let k = z1.dim();
    let (g1, g2) = (z1.num_generators(), z2.num_generators());
    let (q1, q2) = (z1.num_constraints(), z2.num_constraints());
    let mut generators = DMatrix::zeros(k, g1 + g2);
    generators.view_mut((0, 0), (k, g1)).copy_from(&z1.generators);
    generators.view_mut((0, g1), (k, g2)).copy_from(&z2.generators);
    let mut con_lhs = DMatrix::zeros(q1 + q2, g1 + g2);
    con_lhs.view_mut((0, 0), (q1, g1)).copy_from(&z1.con_lhs);
    con_lhs.view_mut((q1, g1), (q2, g2)).copy_from(&z2.con_lhs);
    let mut con_rhs = DVector::zeros(q1 + q2);
    con_rhs.rows_mut(0, q1).copy_from(&z1.con_rhs);
    con_rhs.rows_mut(q1, q2).copy_from(&z2.con_rhs);
    Ok(ConstrainedZonotope {
        center: &z1.center + &z2.center,
        generators,
        con_lhs,
        con_rhs,
    })
}

/// Generalized intersection: the result carries `z1`'s center and generators,
/// with `z2`'s factors appended and tied to `z1` by `G1β1 − G2β2 = c2 − c1`.
pub fn intersect(z1: &ConstrainedZonotope, z2: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    if z1.dim() != z2.dim() {
        return Err(Error::Dimension(format!(
            "intersection of dimensions {} and {}",
            z1.dim(),
            z2.dim()
        )));
    }
    let k = z1.dim();
    let (g1, g2) = (z1.num_generators(), z2.num_generators());
    let (q1, q2) = (z1.num_constraints(), z2.num_constraints());
    let mut generators = DMatrix::zeros(k, g1 + g2);
    generators.view_mut((0, 0), (k, g1)).copy_from(&z1.generators);
    let q = q1 + q2 + k;
    let mut con_lhs = DMatrix::zeros(q, g1 + g2);
    con_lhs.view_mut((0, 0), (q1, g1)).copy_from(&z1.con_lhs);
    con_lhs.view_mut((q1, g1), (q2, g2)).copy_from(&z2.con_lhs);
    con_lhs.view_mut((q1 + q2, 0), (k, g1)).copy_from(&z1.generators);
    con_lhs
        .view_mut((q1 + q2, g1), (k, g2))
        .copy_from(&(-&z2.generators));
    let mut con_rhs = DVector::zeros(q);
    con_rhs.rows_mut(0, q1).copy_from(&z1.con_rhs);
    con_rhs.rows_mut(q1, q2).copy_from(&z2.con_rhs);
    con_rhs.rows_mut(q1 + q2, k).copy_from(&(&z2.center - &z1.center));
    Ok(ConstrainedZonotope {
        center: z1.center.clone(),
        generators,
        con_lhs,
        con_rhs,
    })
}

/// True iff no factor vector in the unit box satisfies `Fβ = b`.
pub fn is_empty(z: &ConstrainedZonotope, settings: &SolverSettings) -> Result<bool> {
    if z.num_constraints() == 0 {
        return Ok(false);
    }
    let gap = lpqp::min_infeasibility(&z.con_lhs, &z.con_rhs, &z.factor_box(), settings)?;
    Ok(gap > settings.tol_feas)
}

/// Membership with feasibility tolerance `settings.tol_feas` (L1 over all residuals).
pub fn contains(z: &ConstrainedZonotope, x: &DVector<f64>, settings: &SolverSettings) -> Result<bool> {
    if x.len() != z.dim() {
        return Err(Error::Dimension(format!(
            "point of length {} for a set of dimension {}",
            x.len(),
            z.dim()
        )));
    }
    let (k, g, q) = (z.dim(), z.num_generators(), z.num_constraints());
    let mut lhs = DMatrix::zeros(q + k, g);
    lhs.view_mut((0, 0), (q, g)).copy_from(&z.con_lhs);
    lhs.view_mut((q, 0), (k, g)).copy_from(&z.generators);
    let mut rhs = DVector::zeros(q + k);
    rhs.rows_mut(0, q).copy_from(&z.con_rhs);
    rhs.rows_mut(q, k).copy_from(&(x - &z.center));
    let gap = lpqp::min_infeasibility(&lhs, &rhs, &z.factor_box(), settings)?;
    Ok(gap <= settings.tol_feas)
}

/// ∞-norm distance from `x` to the set (zero inside).
pub fn distance_inf(z: &ConstrainedZonotope, x: &DVector<f64>, settings: &SolverSettings) -> Result<f64> {
    if x.len() != z.dim() {
        return Err(Error::Dimension(format!(
            "point of length {} for a set of dimension {}",
            x.len(),
            z.dim()
        )));
    }
    // variables [β; t]:  max −t  s.t. Fβ = b, |c + Gβ − x| ≤ t
    let (k, g, q) = (z.dim(), z.num_generators(), z.num_constraints());
    let mut objective = DVector::zeros(g + 1);
    objective[g] = -1.0;
    let mut eq = DMatrix::zeros(q, g + 1);
    eq.view_mut((0, 0), (q, g)).copy_from(&z.con_lhs);
    let mut ineq = DMatrix::zeros(2 * k, g + 1);
    let mut ineq_rhs = DVector::zeros(2 * k);
    for i in 0..k {
        for j in 0..g {
            ineq[(i, j)] = z.generators[(i, j)];
            ineq[(k + i, j)] = -z.generators[(i, j)];
        }
        ineq[(i, g)] = -1.0;
        ineq[(k + i, g)] = -1.0;
        ineq_rhs[i] = x[i] - z.center[i];
        ineq_rhs[k + i] = z.center[i] - x[i];
    }
    let mut bounds = z.factor_box();
    bounds.push((0.0, f64::INFINITY));
    let lp = LinearProgram::new(objective)
        .with_eq(eq, z.con_rhs.clone())
        .with_ineq(ineq, ineq_rhs)
        .with_bounds(bounds);
    match lpqp::solve_lp(&lp, settings)? {
        LpSolution::Optimal { value, .. } => Ok((-value).max(0.0)),
        LpSolution::Infeasible => Err(Error::EmptySet),
        LpSolution::Unbounded => Err(Error::solver("distance program unbounded")),
    }
}

/// Maximizer of `direction·x` over the set.
pub fn support_point(
    z: &ConstrainedZonotope,
    direction: &DVector<f64>,
    settings: &SolverSettings,
) -> Result<(f64, DVector<f64>)> {
    if direction.len() != z.dim() {
        return Err(Error::Dimension(format!(
            "direction of length {} for a set of dimension {}",
            direction.len(),
            z.dim()
        )));
    }
    if z.num_generators() == 0 {
        if z.num_constraints() > 0 && z.con_rhs.amax() > settings.tol_feas {
            return Err(Error::EmptySet);
        }
        return Ok((direction.dot(&z.center), z.center.clone()));
    }
    let objective = z.generators.tr_mul(direction);
    let lp = LinearProgram::new(objective)
        .with_eq(z.con_lhs.clone(), z.con_rhs.clone())
        .with_bounds(z.factor_box());
    match lpqp::solve_lp(&lp, settings)? {
        LpSolution::Optimal { x, .. } => {
            let point = &z.center + &z.generators * &x;
            Ok((direction.dot(&point), point))
        }
        LpSolution::Infeasible => Err(Error::EmptySet),
        LpSolution::Unbounded => Err(Error::solver("support program unbounded over a box")),
    }
}

/// Support function `max {direction·x : x ∈ Z}`.
pub fn support(z: &ConstrainedZonotope, direction: &DVector<f64>, settings: &SolverSettings) -> Result<f64> {
    support_point(z, direction, settings).map(|(v, _)| v)
}

/// Tightest axis-aligned enclosure.
pub fn interval_hull(z: &ConstrainedZonotope, settings: &SolverSettings) -> Result<IntervalBox> {
    let k = z.dim();
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    for i in 0..k {
        let mut e = DVector::zeros(k);
        e[i] = 1.0;
        upper.push(support(z, &e, settings)?);
        e[i] = -1.0;
        lower.push(-support(z, &e, settings)?);
    }
    Ok(IntervalBox { lower, upper })
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> std::result::Result<DMatrix<f64>, String> {
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return Err(format!("{what}: row of length {} where {} expected", r.len(), ncols));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[derive(Serialize, Deserialize)]
struct CzJson {
    c: Vec<f64>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
    #[serde(rename = "F")]
    f: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Serialize for ConstrainedZonotope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CzJson {
            c: self.center.iter().copied().collect(),
            g: rows_of(&self.generators),
            f: rows_of(&self.con_lhs),
            b: self.con_rhs.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConstrainedZonotope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = CzJson::deserialize(d)?;
        let k = raw.c.len();
        let g = raw.g.first().map_or(0, |r| r.len());
        if raw.g.len() != k {
            return Err(D::Error::custom(format!("G has {} rows for a center of length {k}", raw.g.len())));
        }
        let generators = matrix_from_rows(&raw.g, g, "G").map_err(D::Error::custom)?;
        let con_lhs = matrix_from_rows(&raw.f, g, "F").map_err(D::Error::custom)?;
        ConstrainedZonotope::new(DVector::from_vec(raw.c), generators, con_lhs, DVector::from_vec(raw.b))
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}
