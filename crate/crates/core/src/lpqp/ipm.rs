//! Mehrotra predictor–corrector interior-point method for
//!
//! ```text
//!     minimize    ½ xᵀ diag(q) x + cᵀ x
//!     subject to  A x = b,   lo ≤ x ≤ hi
//! ```
//!
//! Bounds may be infinite. The Newton systems are reduced to the normal
//! equations `A Σ⁻¹ Aᵀ`, which stay sparse for the block-structured
//! constraint matrices produced by the set operations.

use super::sparse::{CscMatrix, NormalFactor};

#[derive(Debug, Clone)]
pub(crate) struct StdProblem {
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub q: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Converged,
    /// Feasible to tolerance with a small but not fully closed gap.
    Acceptable,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: Status,
    pub x: Vec<f64>,
    pub primal_res: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmTolerances {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// Primal residual below which a stalled run is still usable.
    pub accept_primal: f64,
    pub max_iter: usize,
}

const STEP_TO_BOUNDARY: f64 = 0.995;
const DIVERGENCE: f64 = 1e13;
const MAX_REFINE: usize = 10;
const POLISH_ROUNDS: usize = 4;

/// Max-abs norm that propagates NaN.
fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

pub(crate) fn solve(p: &StdProblem, tol: &IpmTolerances) -> IpmResult {
    let n = p.c.len();
    let m = p.b.len();
    debug_assert_eq!(p.a.ncols, n);
    debug_assert_eq!(p.a.nrows, m);

    let has_lo: Vec<bool> = p.lo.iter().map(|v| v.is_finite()).collect();
    let has_hi: Vec<bool> = p.hi.iter().map(|v| v.is_finite()).collect();
    let n_compl = has_lo.iter().filter(|&&b| b).count() + has_hi.iter().filter(|&&b| b).count();

    let mut x: Vec<f64> = (0..n)
        .map(|j| match (has_lo[j], has_hi[j]) {
            (true, true) => 0.5 * (p.lo[j] + p.hi[j]),
            (true, false) => p.lo[j] + 1.0,
            (false, true) => p.hi[j] - 1.0,
            (false, false) => 0.0,
        })
        .collect();
    let mut y = vec![0.0; m];
    let mut zl: Vec<f64> = has_lo.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
    let mut zu: Vec<f64> = has_hi.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();

    let b_norm = inf_norm(&p.b);
    let c_norm = inf_norm(&p.c);
    let eps_p = tol.primal * (1.0 + b_norm);
    let eps_d = tol.dual * (1.0 + c_norm);

    let mut factor = NormalFactor::analyze(&p.a);
    let mut rp = vec![0.0; m];
    let mut rd = vec![0.0; n];
    let mut ax = vec![0.0; m];
    let mut aty = vec![0.0; n];
    // bound slacks are carried as iterates: recomputing them from x loses
    // all precision once x sits within rounding distance of a bound
    let mut sl: Vec<f64> = (0..n).map(|j| if has_lo[j] { x[j] - p.lo[j] } else { 1.0 }).collect();
    let mut su: Vec<f64> = (0..n).map(|j| if has_hi[j] { p.hi[j] - x[j] } else { 1.0 }).collect();
    let mut w = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; m];
    let mut dzl = vec![0.0; n];
    let mut dzu = vec![0.0; n];
    let mut tl = vec![0.0; n];
    let mut tu = vec![0.0; n];
    let mut scratch_m = vec![0.0; m];
    let mut scratch_n = vec![0.0; n];

    let quadratic = p.q.iter().any(|&v| v != 0.0);
    let mut best: Option<(f64, f64, Vec<f64>)> = None;

    let mut iter = 0;
    let status = loop {
        p.a.mul_vec(&x, &mut ax);
        for i in 0..m {
            rp[i] = p.b[i] - ax[i];
        }
        p.a.tr_mul_vec(&y, &mut aty);
        for j in 0..n {
            rd[j] = p.q[j] * x[j] + p.c[j] - aty[j] - zl[j] + zu[j];
        }
        let compl: f64 = (0..n)
            .map(|j| {
                (if has_lo[j] { sl[j] * zl[j] } else { 0.0 })
                    + (if has_hi[j] { su[j] * zu[j] } else { 0.0 })
            })
            .sum();
        let mu = if n_compl > 0 { compl / n_compl as f64 } else { 0.0 };
        let rp_norm = inf_norm(&rp);
        let rd_norm = inf_norm(&rd);

        if !rp_norm.is_finite() || !rd_norm.is_finite() || !mu.is_finite() {
            break Status::Diverged;
        }
        if inf_norm(&x) > DIVERGENCE || inf_norm(&y) > DIVERGENCE * 1e3 {
            break Status::Diverged;
        }
        let obj: f64 = (0..n).map(|j| 0.5 * p.q[j] * x[j] * x[j] + p.c[j] * x[j]).sum();
        let eps_mu = tol.gap * (1.0 + obj.abs());
        if rp_norm <= eps_p && rd_norm <= eps_d && mu <= eps_mu {
            break Status::Converged;
        }
        if rp_norm <= tol.accept_primal && rd_norm <= 1e3 * eps_d {
            let score = mu;
            if best.as_ref().is_none_or(|b| score < b.0) {
                best = Some((score, rp_norm, x.clone()));
            }
        }
        // gap closed far past the target while feasibility stalls: further
        // iterations only shrink mu, so fall back to the best iterate
        if best.is_some() && mu < 1e-3 * eps_mu && rp_norm > eps_p {
            break Status::MaxIter;
        }
        if iter >= tol.max_iter {
            break Status::MaxIter;
        }
        iter += 1;

        // Σ and its inverse
        for j in 0..n {
            let mut s = p.q[j];
            if has_lo[j] {
                s += zl[j] / sl[j];
            }
            if has_hi[j] {
                s += zu[j] / su[j];
            }
            if s < 1e-10 {
                s += 1e-10;
            }
            w[j] = 1.0 / s;
        }
        factor.factor(&p.a, &w, 1e-14);

        // predictor
        for j in 0..n {
            tl[j] = if has_lo[j] { -sl[j] * zl[j] } else { 0.0 };
            tu[j] = if has_hi[j] { -su[j] * zu[j] } else { 0.0 };
        }
        newton(
            p, &factor, &has_lo, &has_hi, &sl, &su, &zl, &zu, &w, &rp, &rd, &tl, &tu, &mut h,
            &mut dx, &mut dy, &mut dzl, &mut dzu, &mut scratch_m, &mut scratch_n,
        );
        let (ap_aff, ad_aff) = step_lengths(&has_lo, &has_hi, &sl, &su, &zl, &zu, &dx, &dzl, &dzu, 1.0);
        let (ap_aff, ad_aff) = if quadratic {
            let a = ap_aff.min(ad_aff);
            (a, a)
        } else {
            (ap_aff, ad_aff)
        };
        let sigma = if n_compl > 0 && mu > 0.0 {
            let mu_aff: f64 = (0..n)
                .map(|j| {
                    (if has_lo[j] {
                        (sl[j] + ap_aff * dx[j]) * (zl[j] + ad_aff * dzl[j])
                    } else {
                        0.0
                    }) + (if has_hi[j] {
                        (su[j] - ap_aff * dx[j]) * (zu[j] + ad_aff * dzu[j])
                    } else {
                        0.0
                    })
                })
                .sum::<f64>()
                / n_compl as f64;
            (mu_aff / mu).powi(3).clamp(0.0, 1.0)
        } else {
            0.0
        };

        // corrector
        for j in 0..n {
            tl[j] = if has_lo[j] {
                sigma * mu - sl[j] * zl[j] - dx[j] * dzl[j]
            } else {
                0.0
            };
            tu[j] = if has_hi[j] {
                sigma * mu - su[j] * zu[j] + dx[j] * dzu[j]
            } else {
                0.0
            };
        }
        newton(
            p, &factor, &has_lo, &has_hi, &sl, &su, &zl, &zu, &w, &rp, &rd, &tl, &tu, &mut h,
            &mut dx, &mut dy, &mut dzl, &mut dzu, &mut scratch_m, &mut scratch_n,
        );
        let (mut ap, mut ad) =
            step_lengths(&has_lo, &has_hi, &sl, &su, &zl, &zu, &dx, &dzl, &dzu, STEP_TO_BOUNDARY);
        if quadratic {
            let a = ap.min(ad);
            ap = a;
            ad = a;
        }
        for j in 0..n {
            x[j] += ap * dx[j];
            if has_lo[j] {
                sl[j] += ap * dx[j];
            }
            if has_hi[j] {
                su[j] -= ap * dx[j];
            }
            zl[j] += ad * dzl[j];
            zu[j] += ad * dzu[j];
        }
        for i in 0..m {
            y[i] += ad * dy[i];
        }
    };

    let final_rp = {
        p.a.mul_vec(&x, &mut ax);
        (0..m).fold(0.0_f64, |acc, i| acc.max((p.b[i] - ax[i]).abs()))
    };
    match status {
        Status::Converged => IpmResult {
            status,
            x,
            primal_res: final_rp,
            iterations: iter,
        },
        _ => match best {
            Some((_, rp_best, xb)) if status != Status::Diverged => IpmResult {
                status: Status::Acceptable,
                x: xb,
                primal_res: rp_best,
                iterations: iter,
            },
            _ if status == Status::MaxIter => {
                let (xp, rp_polished) = polish(p, &mut factor, x);
                IpmResult {
                    status: if rp_polished <= tol.accept_primal { Status::Acceptable } else { status },
                    x: xp,
                    primal_res: rp_polished,
                    iterations: iter,
                }
            }
            _ => IpmResult {
                status,
                x,
                primal_res: final_rp,
                iterations: iter,
            },
        },
    }
}

/// Restores `A x = b` for an iterate that is optimal up to a stalled primal
/// residual. Variables sitting on a bound stay put; the correction is spread
/// over the others by a weighted minimum-norm step that never crosses a bound.
fn polish(p: &StdProblem, factor: &mut NormalFactor, mut x: Vec<f64>) -> (Vec<f64>, f64) {
    let n = x.len();
    let m = p.b.len();
    let mut ax = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];
    let residual = |x: &[f64], ax: &mut Vec<f64>| -> Vec<f64> {
        p.a.mul_vec(x, ax);
        p.b.iter().zip(ax.iter()).map(|(b, v)| b - v).collect()
    };
    let mut rp = residual(&x, &mut ax);
    for _ in 0..POLISH_ROUNDS {
        let w: Vec<f64> = (0..n)
            .map(|j| {
                let room = (x[j] - p.lo[j]).min(p.hi[j] - x[j]).max(0.0);
                room.min(1.0).powi(2)
            })
            .collect();
        factor.factor(&p.a, &w, 1e-14);
        let mut dy = rp.clone();
        factor.solve(&mut dy);
        for _ in 0..MAX_REFINE {
            p.a.tr_mul_vec(&dy, &mut tmp_n);
            for j in 0..n {
                tmp_n[j] *= w[j];
            }
            let mut corr: Vec<f64> = vec![0.0; m];
            p.a.mul_vec(&tmp_n, &mut corr);
            for i in 0..m {
                corr[i] = rp[i] - corr[i];
            }
            factor.solve(&mut corr);
            for (d, c) in dy.iter_mut().zip(&corr) {
                *d += c;
            }
        }
        p.a.tr_mul_vec(&dy, &mut tmp_n);
        let dx: Vec<f64> = (0..n).map(|j| w[j] * tmp_n[j]).collect();
        let mut alpha: f64 = 1.0;
        for j in 0..n {
            if dx[j] > 0.0 && p.hi[j].is_finite() {
                alpha = alpha.min((p.hi[j] - x[j]) / dx[j]);
            } else if dx[j] < 0.0 && p.lo[j].is_finite() {
                alpha = alpha.min((p.lo[j] - x[j]) / dx[j]);
            }
        }
        let alpha = alpha.max(0.0);
        let candidate: Vec<f64> = (0..n).map(|j| x[j] + alpha * dx[j]).collect();
        let new_rp = residual(&candidate, &mut ax);
        if inf_norm(&new_rp) >= inf_norm(&rp) {
            break;
        }
        x = candidate;
        rp = new_rp;
    }
    let norm = inf_norm(&rp);
    (x, norm)
}

#[allow(clippy::too_many_arguments)]
fn newton(
    p: &StdProblem,
    factor: &NormalFactor,
    has_lo: &[bool],
    has_hi: &[bool],
    sl: &[f64],
    su: &[f64],
    zl: &[f64],
    zu: &[f64],
    w: &[f64],
    rp: &[f64],
    rd: &[f64],
    tl: &[f64],
    tu: &[f64],
    h: &mut [f64],
    dx: &mut [f64],
    dy: &mut [f64],
    dzl: &mut [f64],
    dzu: &mut [f64],
    scratch_m: &mut [f64],
    scratch_n: &mut [f64],
) {
    let n = h.len();
    for j in 0..n {
        let mut v = -rd[j];
        if has_lo[j] {
            v += tl[j] / sl[j];
        }
        if has_hi[j] {
            v -= tu[j] / su[j];
        }
        h[j] = v;
    }
    // rhs = rp − A W h
    for j in 0..n {
        scratch_n[j] = w[j] * h[j];
    }
    p.a.mul_vec(scratch_n, scratch_m);
    let rhs: Vec<f64> = rp.iter().zip(scratch_m.iter()).map(|(r, v)| r - v).collect();
    dy.copy_from_slice(&rhs);
    factor.solve(dy);
    // iterative refinement with exact products; the factor alone loses
    // accuracy once the barrier weights spread over many decades
    let rhs_norm = inf_norm(&rhs);
    let mut best_res = f64::INFINITY;
    let mut best_dy = dy.to_vec();
    let mut stalled = 0;
    for _ in 0..MAX_REFINE {
        p.a.tr_mul_vec(dy, scratch_n);
        for j in 0..n {
            scratch_n[j] *= w[j];
        }
        p.a.mul_vec(scratch_n, scratch_m);
        let mut corr: Vec<f64> = rhs.iter().zip(scratch_m.iter()).map(|(r, v)| r - v).collect();
        let res = inf_norm(&corr);
        if res < 0.5 * best_res {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if res < best_res {
            best_res = res;
            best_dy.copy_from_slice(dy);
        }
        if !(res > 1e-15 * rhs_norm) || stalled >= 2 {
            break;
        }
        factor.solve(&mut corr);
        for (d, c) in dy.iter_mut().zip(&corr) {
            *d += c;
        }
    }
    dy.copy_from_slice(&best_dy);
    p.a.tr_mul_vec(dy, scratch_n);
    for j in 0..n {
        dx[j] = w[j] * (h[j] + scratch_n[j]);
        dzl[j] = if has_lo[j] { (tl[j] - zl[j] * dx[j]) / sl[j] } else { 0.0 };
        dzu[j] = if has_hi[j] { (tu[j] + zu[j] * dx[j]) / su[j] } else { 0.0 };
    }
}

#[allow(clippy::too_many_arguments)]
fn step_lengths(
    has_lo: &[bool],
    has_hi: &[bool],
    sl: &[f64],
    su: &[f64],
    zl: &[f64],
    zu: &[f64],
    dx: &[f64],
    dzl: &[f64],
    dzu: &[f64],
    eta: f64,
) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for j in 0..dx.len() {
        if has_lo[j] {
            if dx[j] < 0.0 {
                ap = ap.min(-sl[j] / dx[j]);
            }
            if dzl[j] < 0.0 {
                ad = ad.min(-zl[j] / dzl[j]);
            }
        }
        if has_hi[j] {
            if dx[j] > 0.0 {
                ap = ap.min(su[j] / dx[j]);
            }
            if dzu[j] < 0.0 {
                ad = ad.min(-zu[j] / dzu[j]);
            }
        }
    }
    ((eta * ap).min(1.0), (eta * ad).min(1.0))
}
