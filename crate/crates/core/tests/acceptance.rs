//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Tolerances are pinned here and printed with each line.

use std::process::ExitCode;
use std::time::Instant;

use gridsafe_core::czono::ConstrainedZonotope;
use gridsafe_core::env::agents::AgentKind;
use gridsafe_core::env::metrics::{EpisodeTrace, Metrics};
use gridsafe_core::env::series::{synth_days, SynthProfile};
use gridsafe_core::env::{run_days, Dataset, EnvConfig, RewardConfig, ShieldMode};
use gridsafe_core::gridmodel::{self, GridParams, MarketParams, Mode, StorageParams};
use gridsafe_core::lpqp::{self, LinearProgram, LpSolution, SolverSettings};
use gridsafe_core::reach::{self, ForecastLowerBound};
use gridsafe_core::shield::{self, Action};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAFETY_DAYS: usize = 20;
const VIOLATION_TOL: f64 = 1e-6;
const CHARGE_TOL: f64 = 1e-9;
const ORACLE_CONFIGS: usize = 50;
const ORACLE_PITCH: f64 = 1e-3;
const ORACLE_TOL: f64 = 2e-3;
const MINIMALITY_INSTANCES: usize = 100;
const MINIMALITY_SAMPLES: usize = 10_000;
const MINIMALITY_TOL: f64 = 1e-6;
const BALANCE_TOL: f64 = 1e-8;
const RATE_TOL: f64 = 1e-8;
const TARGET_TOL: f64 = 1e-6;
const SHRINK_CONFIGS: usize = 20;
const SHRINK_TOL: f64 = 1e-7;
const MEAN_TIME_BUDGET: f64 = 0.1;
const MAX_TIME_BUDGET: f64 = 1.0;
const UNIT_TOL: f64 = 1e-9;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn settings() -> SolverSettings {
    SolverSettings::default()
}

/// Greedy + full shield over the synthetic days, with target audits on.
/// Shared by the safety, feasibility and performance criteria.
fn safety_run() -> (Metrics, Vec<EpisodeTrace>, GridParams, f64) {
    let cfg = EnvConfig {
        audit: true,
        ..Default::default()
    };
    let data = Dataset::new(synth_days(2024, SAFETY_DAYS, &SynthProfile::default()), &cfg).unwrap();
    let days: Vec<usize> = (0..SAFETY_DAYS).collect();
    let start = Instant::now();
    let (m, traces) = run_days(&cfg, &data, AgentKind::Greedy, &days, 7).unwrap();
    (m, traces, cfg.grid, start.elapsed().as_secs_f64())
}

fn check_safety(m: &Metrics, traces: &[EpisodeTrace], wall: f64) -> Outcome {
    let steps: usize = traces.iter().map(|t| t.records.len()).sum();
    let complete = m.aborted_days.is_empty() && steps == SAFETY_DAYS * 1440;
    let in_box = m.min_charge_state >= 0.34 - CHARGE_TOL && m.max_charge_state <= 6.54 + CHARGE_TOL;
    report(
        "safety",
        complete && in_box && m.max_safety_violation <= VIOLATION_TOL,
        format!(
            "{SAFETY_DAYS} days x 1440 steps ({steps} run, aborted {:?}), max violation {:.3e} (<= {VIOLATION_TOL:e}), \
             charge [{:.6}, {:.6}] within [0.34, 6.54] +- {CHARGE_TOL:e}, wall {wall:.1}s",
            m.aborted_days, m.max_safety_violation, m.min_charge_state, m.max_charge_state
        ),
    )
}

fn check_post_shield(traces: &[EpisodeTrace], grid: &GridParams) -> Outcome {
    let mut worst_balance: f64 = 0.0;
    let mut worst_rate: f64 = 0.0;
    let mut worst_target: f64 = 0.0;
    let mut steps = 0;
    let n = grid.n();
    for r in traces.iter().flat_map(|t| &t.records) {
        steps += 1;
        worst_balance = worst_balance.max(gridmodel::balance_residual(&r.safe, r.net_load, false, n).abs());
        for (i, s) in grid.storages.iter().enumerate() {
            worst_rate = worst_rate.max(r.safe[i] - s.p_max).max(s.p_min - r.safe[i]);
        }
        for (k, mk) in grid.markets.iter().enumerate() {
            worst_rate = worst_rate.max(r.safe[n + k] - mk.p_max).max(mk.p_min - r.safe[n + k]);
        }
        worst_target = worst_target.max(r.target_distance.unwrap_or(f64::INFINITY));
    }
    report(
        "post_shield_feasibility",
        steps > 0 && worst_balance <= BALANCE_TOL && worst_rate <= RATE_TOL && worst_target <= TARGET_TOL,
        format!(
            "{steps} steps: max |balance| {worst_balance:.3e} (<= {BALANCE_TOL:e}), rate excess {worst_rate:.3e} \
             (<= {RATE_TOL:e}), next-state distance to target {worst_target:.3e} (<= {TARGET_TOL:e})"
        ),
    )
}

fn check_performance(m: &Metrics) -> Outcome {
    report(
        "performance",
        m.mean_exec_time <= MEAN_TIME_BUDGET && m.max_exec_time <= MAX_TIME_BUDGET,
        format!(
            "shield time mean {:.4}s (<= {MEAN_TIME_BUDGET}s), max {:.4}s (<= {MAX_TIME_BUDGET}s) over {} steps",
            m.mean_exec_time, m.max_exec_time, m.steps
        ),
    )
}

fn one_storage(rng: &mut ChaCha8Rng, h: usize) -> GridParams {
    let p = rng.random_range(1.0..4.0);
    let e_max = rng.random_range(3.0..10.0);
    GridParams {
        storages: vec![StorageParams {
            p_max: p,
            p_min: -rng.random_range(1.0..4.0),
            e_max,
            e_min: rng.random_range(0.0..0.3) * e_max,
            eta_d: rng.random_range(0.85..1.0),
            eta_c: rng.random_range(0.85..1.0),
            mu: rng.random_range(0.0..0.05),
            gamma: 0.15,
        }],
        markets: vec![MarketParams::default()],
        tau: rng.random_range(0.02..0.3),
        horizon_t: 1440,
        islanding_h: h,
    }
}

/// Gridded oracle over charge levels: a grid point belongs to the step-`t`
/// set when the exact islanding trajectory from it keeps an admissible input
/// and an admissible charge through the end of the window. Returns per-step
/// `[min, max]` of the kept points, or `None` where no point survives.
fn grid_dp(params: &GridParams, d_lower: &[f64]) -> Vec<Option<(f64, f64)>> {
    let s = &params.storages[0];
    let a = 1.0 - s.mu * params.tau;
    let h = d_lower.len();
    let points = ((s.e_max - s.e_min) / ORACLE_PITCH).floor() as usize + 1;
    let in_box = |e: f64| e >= s.e_min - 1e-12 && e <= s.e_max + 1e-12;
    // successor map for one step: single storage carries the whole bound
    let next = |e: f64, d: f64| {
        let p = -d;
        let eta = if p >= 0.0 { 1.0 / s.eta_d } else { s.eta_c };
        a * e - params.tau * eta * p
    };
    let survives = |e0: f64, t0: usize| {
        let mut e = e0;
        for &d in &d_lower[t0..] {
            if -d > s.p_max || -d < s.p_min {
                return false;
            }
            e = next(e, d);
            if !in_box(e) {
                return false;
            }
        }
        true
    };
    let mut out = vec![None; h + 1];
    for (t, slot) in out.iter_mut().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..points {
            let e = s.e_min + k as f64 * ORACLE_PITCH;
            if survives(e, t) {
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
        // the top of the box is not on the pitch grid in general
        if survives(s.e_max, t) {
            hi = hi.max(s.e_max);
            lo = lo.min(s.e_max);
        }
        if lo <= hi {
            *slot = Some((lo, hi));
        }
    }
    out
}

fn check_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = settings();
    let mut worst: f64 = 0.0;
    let mut empties = 0;
    let mut mismatches = Vec::new();
    for case in 0..ORACLE_CONFIGS {
        let h = rng.random_range(1..=10);
        let params = one_storage(&mut rng, h);
        let st = &params.storages[0];
        let d_lower: Vec<f64> = (0..h)
            .map(|_| rng.random_range(-0.7 * st.p_max..-0.7 * st.p_min))
            .collect();
        let dp = grid_dp(&params, &d_lower);
        match reach::compute_safe_sets(&params, &ForecastLowerBound { d_lower: d_lower.clone() }, &s) {
            Ok(seq) => {
                let hulls = reach::sequence_hulls(&seq, &s).unwrap();
                for (t, hull) in hulls.iter().enumerate() {
                    match dp[t] {
                        Some((lo, hi)) => {
                            let err = (hull.lower[0] - lo).abs().max((hull.upper[0] - hi).abs());
                            worst = worst.max(err);
                            if err > ORACLE_TOL {
                                mismatches.push(format!("case {case} t {t}: err {err:.3e}"));
                            }
                        }
                        // a set narrower than the pitch may hold no grid point
                        None if hull.upper[0] - hull.lower[0] <= ORACLE_PITCH => {}
                        None => mismatches.push(format!("case {case} t {t}: oracle empty, set non-empty")),
                    }
                }
            }
            Err(e) if e.exit_code() == 3 => {
                empties += 1;
                if let Some((lo, hi)) = dp[0] {
                    if hi - lo > ORACLE_PITCH {
                        mismatches.push(format!("case {case}: reach empty ({e}), oracle [{lo}, {hi}]"));
                    }
                }
            }
            Err(e) => mismatches.push(format!("case {case}: {e}")),
        }
    }
    report(
        "oracle_equivalence",
        mismatches.is_empty(),
        format!(
            "{ORACLE_CONFIGS} one-storage configs (H <= 10, {empties} empty), pitch {ORACLE_PITCH:e}, \
             worst hull gap {worst:.3e} (<= {ORACLE_TOL:e}){}",
            if mismatches.is_empty() { String::new() } else { format!("; {}", mismatches.join("; ")) }
        ),
    )
}

/// Decision polytope of the projection, `z = [β; p_BD; p_BC; p_M]`, with one
/// mode fixed per storage so the split dynamics coincide with the true ones.
struct ModePolytope {
    eq: DMatrix<f64>,
    rhs: DVector<f64>,
    lo: DVector<f64>,
    hi: DVector<f64>,
    ng: usize,
}

fn mode_polytope(
    params: &GridParams,
    target: &ConstrainedZonotope,
    x: &[f64],
    d: f64,
    modes: &[Mode],
) -> ModePolytope {
    let n = params.n();
    let m = params.m();
    let ng = target.num_generators();
    let nc = target.num_constraints();
    let nu = 2 * n + m;
    let a = gridmodel::build_a(params);
    let b = gridmodel::build_b_split(params);
    let rows = n + nc + 1;
    let mut eq = DMatrix::zeros(rows, ng + nu);
    let mut rhs = DVector::zeros(rows);
    eq.view_mut((0, 0), (n, ng)).copy_from(target.generators());
    eq.view_mut((0, ng), (n, nu)).copy_from(&(-&b));
    let ax = &a * DVector::from_row_slice(x);
    rhs.rows_mut(0, n).copy_from(&(ax - target.center()));
    eq.view_mut((n, 0), (nc, ng)).copy_from(target.con_lhs());
    rhs.rows_mut(n, nc).copy_from(target.con_rhs());
    for j in 0..nu {
        eq[(n + nc, ng + j)] = 1.0;
    }
    rhs[n + nc] = -d;
    let mut lo = DVector::from_element(ng + nu, -1.0);
    let mut hi = DVector::from_element(ng + nu, 1.0);
    for (i, s) in params.storages.iter().enumerate() {
        let (dis, chg) = (ng + i, ng + n + i);
        lo[dis] = 0.0;
        hi[dis] = if modes[i] == Mode::Discharge { s.p_max } else { 0.0 };
        lo[chg] = if modes[i] == Mode::Charge { s.p_min } else { 0.0 };
        hi[chg] = 0.0;
    }
    for (k, mk) in params.markets.iter().enumerate() {
        lo[ng + 2 * n + k] = mk.p_min;
        hi[ng + 2 * n + k] = mk.p_max;
    }
    ModePolytope { eq, rhs, lo, hi, ng }
}

fn action_of(z: &DVector<f64>, ng: usize, n: usize, m: usize) -> DVector<f64> {
    DVector::from_fn(n + m, |i, _| if i < n { z[ng + i] + z[ng + n + i] } else { z[ng + n + i] })
}

/// Relative-interior start point: mean of LP vertices in random directions.
fn interior_point(poly: &ModePolytope, rng: &mut ChaCha8Rng) -> Option<DVector<f64>> {
    let dim = poly.lo.len();
    let bounds: Vec<(f64, f64)> = (0..dim).map(|j| (poly.lo[j], poly.hi[j])).collect();
    let mut acc = DVector::zeros(dim);
    let k = 8;
    for _ in 0..k {
        let c = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let lp = LinearProgram::new(c).with_eq(poly.eq.clone(), poly.rhs.clone()).with_bounds(bounds.clone());
        match lpqp::solve_lp(&lp, &settings()) {
            Ok(LpSolution::Optimal { x, .. }) => acc += x,
            _ => return None,
        }
    }
    Some(acc / k as f64)
}

fn null_space(eq: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = eq.ncols();
    let padded = if eq.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (eq.nrows(), cols)).copy_from(eq);
        p
    } else {
        eq.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let basis: Vec<DVector<f64>> = (0..cols)
        .filter(|&i| svd.singular_values[i] <= 1e-10 * smax.max(1.0))
        .map(|i| v_t.row(i).transpose())
        .collect();
    if basis.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

fn check_minimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let s = settings();
    let mut params = GridParams::default();
    params.islanding_h = 12;
    let n = params.n();
    let m = params.m();
    let mut worst_gain: f64 = f64::NEG_INFINITY;
    let mut solved = 0;
    let mut infeasible = 0;
    let mut sampled = 0usize;
    let mut failures = Vec::new();
    for case in 0..MINIMALITY_INSTANCES {
        let d_lower: Vec<f64> = (0..params.islanding_h).map(|_| rng.random_range(-3.0..2.0)).collect();
        let Ok(target) = reach::safe_set_at_start(&params, &ForecastLowerBound { d_lower }, &s) else {
            continue;
        };
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.34..6.54)).collect();
        let d = rng.random_range(-4.0..4.0);
        let a = Action::new(
            (0..n).map(|_| rng.random_range(-4.0..4.0)).collect(),
            (0..m).map(|_| rng.random_range(-6.0..6.0)).collect(),
        );
        let safe = match shield::project_action(&a, &x, &target, d, &params, &s) {
            Ok(safe) => safe,
            Err(e) if e.kind() == "shield_infeasible" => {
                infeasible += 1;
                continue;
            }
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        solved += 1;
        let a_vec = DVector::from_vec(a.to_flat());
        let combos = 1usize << n;
        let per_mode = MINIMALITY_SAMPLES / combos;
        for combo in 0..combos {
            let modes: Vec<Mode> = (0..n)
                .map(|i| if combo >> i & 1 == 0 { Mode::Discharge } else { Mode::Charge })
                .collect();
            let poly = mode_polytope(&params, &target, &x, d, &modes);
            let Some(mut z) = interior_point(&poly, &mut rng) else { continue };
            let basis = null_space(&poly.eq);
            if basis.ncols() == 0 {
                continue;
            }
            for _ in 0..per_mode {
                let dir = &basis * DVector::from_fn(basis.ncols(), |_, _| rng.random_range(-1.0..1.0));
                let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for j in 0..z.len() {
                    if dir[j].abs() > 1e-14 {
                        let (u, v) = ((poly.lo[j] - z[j]) / dir[j], (poly.hi[j] - z[j]) / dir[j]);
                        t_lo = t_lo.max(u.min(v));
                        t_hi = t_hi.min(u.max(v));
                    }
                }
                if !(t_lo <= t_hi) {
                    continue;
                }
                let step = rng.random_range(t_lo.min(0.0)..=t_hi.max(0.0));
                z += step * &dir;
                sampled += 1;
                let dist = (&a_vec - action_of(&z, poly.ng, n, m)).norm();
                let gain = safe.correction - dist;
                worst_gain = worst_gain.max(gain);
                if gain > MINIMALITY_TOL {
                    failures.push(format!("case {case}: sample improves distance by {gain:.3e}"));
                    break;
                }
            }
        }
    }
    report(
        "projection_minimality",
        failures.is_empty() && solved > 0,
        format!(
            "{MINIMALITY_INSTANCES} instances ({solved} projected, {infeasible} infeasible targets), {sampled} \
             hit-and-run samples over the per-mode polytopes, best improvement {worst_gain:.3e} (<= {MINIMALITY_TOL:e}){}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn check_shrinkage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = settings();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut failures = Vec::new();
    while checked < SHRINK_CONFIGS {
        let h = rng.random_range(2..=20);
        let mut params = one_storage(&mut rng, h);
        params.storages.push(one_storage(&mut rng, h).storages.remove(0));
        params.tau = rng.random_range(0.02..0.2);
        let cap = params.storages.iter().map(|s| s.p_max).sum::<f64>();
        let d = rng.random_range(-0.5 * cap..0.3 * cap);
        let Ok(seq) = reach::compute_safe_sets(&params, &ForecastLowerBound { d_lower: vec![d; h] }, &s) else {
            continue;
        };
        checked += 1;
        let hulls = reach::sequence_hulls(&seq, &s).unwrap();
        for t in 0..h {
            for i in 0..2 {
                let excess = (hulls[t + 1].lower[i] - hulls[t].lower[i]).max(hulls[t].upper[i] - hulls[t + 1].upper[i]);
                worst = worst.max(excess);
            }
            if !hulls[t + 1].encloses(&hulls[t], SHRINK_TOL) {
                failures.push(format!("config {checked} t {t}"));
            }
        }
    }
    report(
        "monotone_shrinkage",
        failures.is_empty(),
        format!(
            "{SHRINK_CONFIGS} two-storage configs, constant bound, worst hull excess {worst:.3e} (<= {SHRINK_TOL:e}){}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn check_baseline_contrast() -> Outcome {
    let mut max_violation = Vec::new();
    for mode in [ShieldMode::FullShield, ShieldMode::BaselineShield] {
        let cfg = EnvConfig {
            mode,
            ..Default::default()
        };
        let data = Dataset::new(synth_days(31, 1, &SynthProfile::stress()), &cfg).unwrap();
        let (m, _) = run_days(&cfg, &data, AgentKind::Greedy, &[0], 3).unwrap();
        max_violation.push(m.max_safety_violation);
    }
    report(
        "baseline_contrast",
        max_violation[0] <= VIOLATION_TOL && max_violation[1] > 0.0,
        format!(
            "stress day, greedy agent, same seeds: full-shield max violation {:.3e} (<= {VIOLATION_TOL:e}), \
             baseline {:.3e} (> 0)",
            max_violation[0], max_violation[1]
        ),
    )
}

fn check_unit_equalities() -> Outcome {
    let table = GridParams::default();
    let tau = 1.0 / 60.0;
    let mut checks: Vec<(&str, f64, f64, Option<f64>)> = Vec::new();
    let a = gridmodel::build_a(&table);
    checks.push(("A_11", a[(0, 0)], 1.0 - 0.012 * tau, Some(0.9998)));
    let b_dis = gridmodel::build_b(&table, &[Mode::Discharge, Mode::Discharge]).unwrap();
    checks.push(("B discharge", b_dis[(0, 0)], -tau / 0.98, Some(-0.017007)));
    let b_chg = gridmodel::build_b(&table, &[Mode::Charge, Mode::Charge]).unwrap();
    checks.push(("B charge", b_chg[(0, 0)], -tau * 0.98, Some(-0.016333)));
    let b_split = gridmodel::build_b_split(&table);
    checks.push(("B split discharge", b_split[(0, 0)], -tau / 0.98, None));
    checks.push(("B split charge", b_split[(0, 2)], -tau * 0.98, None));
    let e1 = gridmodel::step_dynamics(&[5.0, 5.0], &[1.0, 0.0, 0.0], &table);
    checks.push(("dynamics discharge", e1[0], 5.0 - tau / 0.98 - tau * 0.012 * 5.0, Some(4.981993)));
    let mut lossless = table.clone();
    lossless.tau = 1.0;
    lossless.storages[0].mu = 0.0;
    let e2 = gridmodel::step_dynamics(&[5.0, 5.0], &[-1.0, 0.0, 0.0], &lossless);
    checks.push(("dynamics charge", e2[0], 5.98, Some(5.98)));
    let st = &table.storages[0];
    checks.push(("storage cost", gridmodel::storage_cost(3.0, st, tau), 0.0075, Some(0.0075)));
    checks.push(("storage cost sym", gridmodel::storage_cost(-3.0, st, tau), 0.0075, None));
    checks.push(("market import", gridmodel::market_cost(2.0, 0.30, 0.06, tau), 0.01, Some(0.01)));
    checks.push(("market export", gridmodel::market_cost(-2.0, 0.30, 0.06, tau), 0.002, Some(0.002)));
    checks.push(("balance", gridmodel::balance_residual(&[2.0, 1.0], -3.0, false, 1), 0.0, None));
    checks.push(("balance islanding", gridmodel::balance_residual(&[1.0, -1.0], 0.0, true, 1), 1.0, None));
    let r = RewardConfig::default();
    checks.push(("reward", r.reward(0.01, 0.2), -0.105, Some(-0.105)));
    checks.push(("reward safe", r.reward(0.01, 0.0), -0.005, None));

    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, got, exact, printed) in &checks {
        let err = (got - exact).abs();
        worst = worst.max(err);
        let printed_ok = printed.is_none_or(|p| (got - p).abs() <= 0.5e-6 + 1e-15);
        if err > UNIT_TOL || !printed_ok {
            failures.push(format!("{name}: {got} vs {exact}"));
        }
    }
    report(
        "unit_equalities",
        failures.is_empty(),
        format!(
            "{} dynamics/cost/reward values, worst deviation {worst:.3e} (<= {UNIT_TOL:e}), printed 6-digit values match{}",
            checks.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    outcomes.push(check_unit_equalities());
    outcomes.push(check_oracle());
    outcomes.push(check_shrinkage());
    outcomes.push(check_minimality());
    outcomes.push(check_baseline_contrast());
    let (metrics, traces, grid, wall) = safety_run();
    outcomes.push(check_safety(&metrics, &traces, wall));
    outcomes.push(check_post_shield(&traces, &grid));
    outcomes.push(check_performance(&metrics));

    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
