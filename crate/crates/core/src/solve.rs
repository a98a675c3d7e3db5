//! Critical points of `I_eps`: damped Newton minimization, Newton on the
//! residual for saddles, a path-deformation mountain pass and the
//! `eps -> 0` continuation.

use crate::domain::BoundaryPoint;
use crate::energy::{EnergyBreakdown, Problem, StateField};
use crate::error::{Error, Result};
use crate::fields::{normalizing_offset, perturb};
use crate::linalg::{dot, norm2, CsrMatrix, Ldlt};
use crate::spectral::{hessian_negative_count, morse_index, DEFAULT_TOL_EIG};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub path_points: usize,
    /// Descent sweeps allowed for one mountain-pass run.
    pub max_sweeps: usize,
    pub eps_schedule: Vec<f64>,
    pub blowup_threshold: f64,
    /// Largest nodal change of one Newton step.
    pub step_cap: f64,
    pub armijo: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            path_points: 17,
            max_sweeps: 4000,
            eps_schedule: vec![0.05, 0.02, 0.01, 0.005],
            blowup_threshold: 50.0,
            step_cap: 5.0,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Minimize,
    Newton,
    MountainPass,
    Continuation,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSearchStep {
    pub iteration: usize,
    pub alpha: f64,
    pub energy: f64,
    pub residual: f64,
    /// Mass shift added to the Newton matrix.
    pub shift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub state: StateField,
    pub energy: EnergyBreakdown,
    pub residual_norm: f64,
    pub iterations: usize,
    pub line_search_trace: Vec<LineSearchStep>,
    pub converged: bool,
    pub blowup_flag: bool,
    pub method: Method,
    pub eps: f64,
    /// Negative inertia of the Hessian at the returned state, when measured.
    pub index: Option<usize>,
    pub message: String,
}

fn add(u: &StateField, alpha: f64, d: &[f64]) -> StateField {
    StateField::new(u.values.iter().zip(d).map(|(a, b)| a + alpha * b).collect())
}

fn inf_norm(d: &[f64]) -> f64 {
    d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn finish(
    problem: &Problem,
    u: StateField,
    eps: f64,
    method: Method,
    iterations: usize,
    trace: Vec<LineSearchStep>,
    converged: bool,
    message: String,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let energy = problem.energy(&u, eps)?;
    let residual_norm = problem.residual_norm(&u, eps)?;
    let blowup_flag = energy.overflow || u.max() > opts.blowup_threshold;
    Ok(SolveReport {
        state: u,
        energy,
        residual_norm,
        iterations,
        line_search_trace: trace,
        converged,
        blowup_flag,
        method,
        eps,
        index: None,
        message,
    })
}

/// Damped Newton descent on `I_eps` from `init`.
///
/// Indefinite Newton matrices are shifted by `sigma M` (lumped mass); `sigma` grows
/// tenfold until the factorization is positive definite and halves after each
/// accepted step. Convergence requires `|grad| < tol` and a positive semidefinite
/// Hessian (inertia of `H + 1e-8 B`).
pub fn minimize(problem: &Problem, eps: f64, init: &StateField, opts: &SolveOptions) -> Result<SolveReport> {
    let mass = CsrMatrix::from_diagonal(&problem.ops.mass);
    let mut u = init.clone();
    let mut e = problem.energy(&u, eps)?.total;
    let mut g = problem.gradient(&u, eps)?;
    let mut sigma = 0.0f64;
    let mut trace = Vec::new();
    let scale = problem.ops.mass.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for it in 0..opts.max_iter {
        let r = norm2(&g);
        if !e.is_finite() || u.max() > opts.blowup_threshold {
            return finish(problem, u, eps, Method::Minimize, it, trace, false, "blow-up".into(), opts);
        }
        if r < opts.tol {
            let neg = hessian_negative_count(problem, &u, eps, 1e-8)?;
            let mut rep = if neg == 0 {
                finish(problem, u, eps, Method::Minimize, it, trace, true, "converged".into(), opts)?
            } else {
                let msg = format!("critical point with {neg} negative directions, not a local minimum");
                finish(problem, u, eps, Method::Minimize, it, trace, false, msg, opts)?
            };
            rep.index = Some(neg);
            return Ok(rep);
        }
        let h = problem.hessian(&u, eps)?;
        let fac = loop {
            let m = if sigma > 0.0 { h.linear_combination(1.0, &mass, sigma) } else { h.clone() };
            let f = Ldlt::factor(&m)?;
            if f.is_positive_definite() {
                break f;
            }
            sigma = if sigma == 0.0 { 1e-4 / scale.min(1.0) } else { 10.0 * sigma };
            if sigma > 1e20 {
                return Err(Error::Factorization("no positive definite shift found".into()));
            }
        };
        let mut d = fac.solve(&g);
        d.iter_mut().for_each(|x| *x = -*x);
        let cap = inf_norm(&d);
        if cap > opts.step_cap {
            d.iter_mut().for_each(|x| *x *= opts.step_cap / cap);
        }
        let slope = dot(&g, &d);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = add(&u, alpha, &d);
            let et = problem.energy(&trial, eps)?;
            if !et.overflow && et.total.is_finite() {
                let armijo = et.total <= e + opts.armijo * alpha * slope + 1e-14 * e.abs();
                let flat = alpha == 1.0 && (et.total - e).abs() <= 1e-12 * (1.0 + e.abs());
                if armijo || flat {
                    let gt = problem.gradient(&trial, eps)?;
                    if armijo || norm2(&gt) < r {
                        accepted = Some((trial, et.total, gt));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, et, gt)) => {
                u = trial;
                e = et;
                g = gt;
                trace.push(LineSearchStep { iteration: it, alpha, energy: e, residual: norm2(&g), shift: sigma });
                sigma *= 0.5;
                if sigma < 1e-12 {
                    sigma = 0.0;
                }
            }
            None => {
                let msg = format!("line search failed at iteration {it} with residual {r:.3e}");
                return finish(problem, u, eps, Method::Minimize, it, trace, false, msg, opts);
            }
        }
    }
    let msg = format!("no convergence in {} iterations", opts.max_iter);
    finish(problem, u, eps, Method::Minimize, opts.max_iter, trace, false, msg, opts)
}

/// Newton's method on `grad I_eps = 0` with backtracking on the residual norm.
/// Finds saddles as well as minima.
pub fn find_critical(problem: &Problem, eps: f64, init: &StateField, opts: &SolveOptions) -> Result<SolveReport> {
    let mut u = init.clone();
    let mut g = problem.gradient(&u, eps)?;
    let mut trace = Vec::new();
    for it in 0..opts.max_iter {
        let r = norm2(&g);
        if u.max() > opts.blowup_threshold {
            return finish(problem, u, eps, Method::Newton, it, trace, false, "blow-up".into(), opts);
        }
        if r < opts.tol {
            let mut rep = finish(problem, u, eps, Method::Newton, it, trace, true, "converged".into(), opts)?;
            rep.index = Some(hessian_negative_count(problem, &rep.state, eps, 1e-8)?);
            return Ok(rep);
        }
        let h = problem.hessian(&u, eps)?;
        let mut d = Ldlt::factor(&h)?.solve(&g);
        d.iter_mut().for_each(|x| *x = -*x);
        if !d.iter().all(|x| x.is_finite()) {
            let msg = format!("singular Newton system at iteration {it}");
            return finish(problem, u, eps, Method::Newton, it, trace, false, msg, opts);
        }
        let cap = inf_norm(&d);
        if cap > opts.step_cap {
            d.iter_mut().for_each(|x| *x *= opts.step_cap / cap);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = add(&u, alpha, &d);
            if let Ok(gt) = problem.gradient(&trial, eps) {
                let rt = norm2(&gt);
                if rt.is_finite() && rt <= (1.0 - opts.armijo * alpha) * r {
                    accepted = Some((trial, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, gt)) => {
                u = trial;
                g = gt;
                let energy = problem.energy(&u, eps)?.total;
                trace.push(LineSearchStep { iteration: it, alpha, energy, residual: norm2(&g), shift: 0.0 });
            }
            None => {
                let msg = format!("residual line search failed at iteration {it} with residual {r:.3e}");
                return finish(problem, u, eps, Method::Newton, it, trace, false, msg, opts);
            }
        }
    }
    let msg = format!("no convergence in {} iterations", opts.max_iter);
    finish(problem, u, eps, Method::Newton, opts.max_iter, trace, false, msg, opts)
}

/// `phi(x) = log(4 mu^2 / (mu^2 |x - q|^2 - 1)^2) - log|K(x)|` plus the normalizing
/// offset, with `q = p + q2 n(p)` outside the domain and `mu = sqrt(1 + a^2) / q2`.
pub fn test_function(problem: &Problem, p: &BoundaryPoint, q2: f64, a: f64) -> Result<StateField> {
    if !(q2 > 0.0 && a > 0.0) {
        return Err(Error::Precondition(format!("need q2 > 0 and a > 0, got q2 = {q2}, a = {a}")));
    }
    let mu = (1.0 + a * a).sqrt() / q2;
    let q = [p.position[0] + q2 * p.normal[0], p.position[1] + q2 * p.normal[1]];
    let domain = problem.mesh.spec;
    let xs = problem.mesh.dof_coords();
    let values = xs
        .iter()
        .zip(&problem.coef.k_abs)
        .map(|(x, k)| {
            let d2 = (x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2);
            let w = mu * mu * d2 - 1.0;
            if !(w > 0.0) {
                return Err(Error::Precondition(format!("test function singular at ({}, {})", x[0], x[1])));
            }
            Ok((4.0 * mu * mu / (w * w)).ln() - k.ln() + normalizing_offset(&domain, *x))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(StateField::new(values))
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointReport {
    pub state: StateField,
    pub a: f64,
    pub mu: f64,
    pub energy: f64,
    pub boundary_exp: f64,
    /// `(a, I_eps)` for every schedule entry tried.
    pub tried: Vec<(f64, f64)>,
}

/// First test function along `a_schedule` (decreasing `a = sqrt(mu^2 q2^2 - 1)`) with
/// `I_eps < min(0, below)` and `oint e^{u/2} > delta`.
pub fn build_u1(
    problem: &Problem,
    eps: f64,
    p: &BoundaryPoint,
    q2: f64,
    a_schedule: &[f64],
    delta: f64,
    below: f64,
) -> Result<EndpointReport> {
    let mut tried = Vec::new();
    for &a in a_schedule {
        let u = test_function(problem, p, q2, a)?;
        let e = problem.energy(&u, eps)?;
        tried.push((a, e.total));
        let be = problem.boundary_exp_integral(&u);
        if e.total < below.min(0.0) && !e.overflow && be > delta {
            return Ok(EndpointReport { state: u, a, mu: (1.0 + a * a).sqrt() / q2, energy: e.total, boundary_exp: be, tried });
        }
    }
    Err(Error::NotConverged(format!(
        "no test function with negative energy along the schedule (D(p) <= 1 or schedule too coarse); tried {tried:?}"
    )))
}

/// Discretized path with energies and boundary integrals.
#[derive(Debug, Clone, Serialize)]
pub struct PathState {
    pub points: Vec<StateField>,
    pub energies: Vec<f64>,
    /// `oint e^{u/2}` at each point.
    pub boundary_exp: Vec<f64>,
    pub max_index: usize,
}

impl PathState {
    fn new(problem: &Problem, eps: f64, points: Vec<StateField>) -> Result<Self> {
        let energies = points.iter().map(|u| problem.energy(u, eps).map(|e| e.total)).collect::<Result<Vec<_>>>()?;
        let boundary_exp = points.iter().map(|u| problem.boundary_exp_integral(u)).collect();
        let max_index = argmax(&energies);
        Ok(Self { points, energies, boundary_exp, max_index })
    }

    fn update(&mut self, problem: &Problem, j: usize, u: StateField, e: f64) {
        self.boundary_exp[j] = problem.boundary_exp_integral(&u);
        self.points[j] = u;
        self.energies[j] = e;
        self.max_index = argmax(&self.energies);
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn h1_distance(b: &CsrMatrix, u: &StateField, v: &StateField) -> f64 {
    let d: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect();
    b.quadratic_form(&d).max(0.0).sqrt()
}

fn lerp(u: &StateField, v: &StateField, t: f64) -> StateField {
    StateField::new(u.values.iter().zip(&v.values).map(|(a, b)| a + t * (b - a)).collect())
}

/// Redistributes interior points at equal H^1 distance along the polygonal path.
fn reparametrize(problem: &Problem, eps: f64, path: &mut PathState) -> Result<()> {
    let b = &problem.ops.h1;
    let n = path.points.len();
    let mut cum = vec![0.0; n];
    for j in 1..n {
        cum[j] = cum[j - 1] + h1_distance(b, &path.points[j - 1], &path.points[j]);
    }
    let total = cum[n - 1];
    if !(total > 0.0) {
        return Ok(());
    }
    let mut pts = Vec::with_capacity(n);
    pts.push(path.points[0].clone());
    let mut seg = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 1 < n - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        pts.push(lerp(&path.points[seg], &path.points[seg + 1], t.clamp(0.0, 1.0)));
    }
    pts.push(path.points[n - 1].clone());
    *path = PathState::new(problem, eps, pts)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierCheck {
    pub delta: f64,
    /// Largest `I_eps` where the path crosses `oint e^{u/2} = delta`.
    pub crossing_energy: Option<f64>,
    pub endpoint_max: f64,
    pub margin: Option<f64>,
    pub passed: bool,
}

/// `I_eps` on the level set `oint e^{u/2} = delta` along the path, located by bisection
/// inside each segment that crosses it.
pub fn barrier_check(problem: &Problem, eps: f64, path: &PathState, delta: f64) -> Result<BarrierCheck> {
    let endpoint_max = path.energies[0].max(*path.energies.last().unwrap());
    let mut crossing: Option<f64> = None;
    for j in 0..path.points.len() - 1 {
        let (b0, b1) = (path.boundary_exp[j] - delta, path.boundary_exp[j + 1] - delta);
        if b0 == 0.0 || b0 * b1 < 0.0 {
            let (u, v) = (&path.points[j], &path.points[j + 1]);
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let bm = problem.boundary_exp_integral(&lerp(u, v, mid)) - delta;
                if (bm < 0.0) == (b0 < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let e = problem.energy(&lerp(u, v, 0.5 * (lo + hi)), eps)?.total;
            crossing = Some(crossing.map_or(e, |c: f64| c.max(e)));
        }
    }
    let margin = crossing.map(|c| c - endpoint_max);
    Ok(BarrierCheck { delta, crossing_energy: crossing, endpoint_max, margin, passed: margin.is_some_and(|m| m > 0.0) })
}

#[derive(Debug, Clone, Serialize)]
pub struct MountainPassReport {
    pub solve: SolveReport,
    pub path: PathState,
    pub barrier: BarrierCheck,
    pub sweeps: usize,
    /// Max-point energy after each sweep.
    pub max_energy_trace: Vec<f64>,
}

/// Path-deformation mountain pass between `u0` and `u1`.
///
/// Each sweep takes an H^1 steepest-descent step (Armijo) at the highest interior
/// point and re-spaces the path by H^1 arc length. Once the H^1-dual gradient at the
/// top is small, Newton on the residual polishes the top point; the result must have
/// index at most one. Fails on path collapse (the top reaching an endpoint).
pub fn mountain_pass(
    problem: &Problem,
    eps: f64,
    u0: &StateField,
    u1: &StateField,
    delta: f64,
    opts: &SolveOptions,
) -> Result<MountainPassReport> {
    let p = opts.path_points.max(3);
    let pts: Vec<StateField> = (0..p).map(|j| lerp(u0, u1, j as f64 / (p - 1) as f64)).collect();
    let mut path = PathState::new(problem, eps, pts)?;
    let bfac = Ldlt::factor(&problem.ops.h1)?;
    let mut alpha = 1.0f64;
    let mut trace = Vec::new();
    let mut max_trace = Vec::new();
    let mut switch = 1e-2;
    let mut g0: Option<f64> = None;
    for sweep in 0..opts.max_sweeps {
        let j = path.max_index;
        if j == 0 || j == p - 1 {
            let barrier = barrier_check(problem, eps, &path, delta)?;
            let msg = format!("path collapse: highest point is endpoint {j} after {sweep} sweeps");
            let solve = finish(problem, path.points[j].clone(), eps, Method::MountainPass, sweep, trace, false, msg, opts)?;
            return Ok(MountainPassReport { solve, path, barrier, sweeps: sweep, max_energy_trace: max_trace });
        }
        let u = path.points[j].clone();
        let e = path.energies[j];
        max_trace.push(e);
        let g = problem.gradient(&u, eps)?;
        let mut d = bfac.solve(&g);
        let gn = dot(&g, &d).max(0.0).sqrt();
        let g0v = *g0.get_or_insert(gn);
        if gn < switch * g0v.max(1.0) || gn < opts.tol {
            let polished = find_critical(problem, eps, &u, opts)?;
            let ok = polished.converged && polished.index.is_some_and(|i| i <= 1) && !polished.blowup_flag;
            if ok {
                let barrier = barrier_check(problem, eps, &path, delta)?;
                let mut solve = polished;
                solve.method = Method::MountainPass;
                solve.iterations += sweep;
                solve.line_search_trace = [trace, solve.line_search_trace].concat();
                let spec = morse_index(problem, &solve.state, eps, 4, DEFAULT_TOL_EIG)?;
                solve.index = Some(spec.negative_count);
                if spec.negative_count > 1 {
                    solve.converged = false;
                    solve.message = format!("saddle has index {}", spec.negative_count);
                }
                return Ok(MountainPassReport { solve, path, barrier, sweeps: sweep, max_energy_trace: max_trace });
            }
            switch *= 0.1;
        }
        d.iter_mut().for_each(|x| *x = -*x);
        let cap = inf_norm(&d);
        let mut a = (2.0 * alpha).min(opts.step_cap / cap.max(f64::MIN_POSITIVE));
        let mut moved = false;
        for _ in 0..60 {
            let trial = add(&u, a, &d);
            let et = problem.energy(&trial, eps)?;
            if !et.overflow && et.total <= e - opts.armijo * a * gn * gn {
                trace.push(LineSearchStep { iteration: sweep, alpha: a, energy: et.total, residual: norm2(&g), shift: 0.0 });
                path.update(problem, j, trial, et.total);
                moved = true;
                alpha = a;
                break;
            }
            a *= 0.5;
        }
        if !moved {
            switch = f64::INFINITY;
            continue;
        }
        reparametrize(problem, eps, &mut path)?;
    }
    let barrier = barrier_check(problem, eps, &path, delta)?;
    let j = path.max_index;
    let msg = format!("no convergence in {} sweeps", opts.max_sweeps);
    let solve = finish(problem, path.points[j].clone(), eps, Method::MountainPass, opts.max_sweeps, trace, false, msg, opts)?;
    Ok(MountainPassReport { solve, path, barrier, sweeps: opts.max_sweeps, max_energy_trace: max_trace })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStep {
    pub eps: f64,
    pub report: SolveReport,
    pub sup_u: f64,
    pub area_mass: f64,
    pub boundary_mass: Vec<f64>,
    /// Gauss-Bonnet defect of the perturbed problem.
    pub gb_residual: f64,
    /// `int K~_eps + oint h~_eps` of the perturbed problem.
    pub chi_gen: f64,
    pub warm_started: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub steps: Vec<ContinuationStep>,
    pub blowup: bool,
    pub verdict: String,
}

/// Per-component `oint h e^{u/2}` and `int |K| e^u` for the unperturbed data.
pub fn masses(problem: &Problem, u: &StateField) -> (f64, Vec<f64>) {
    let ops = &problem.ops;
    let area = (0..problem.n()).map(|i| ops.mass[i] * problem.coef.k_abs[i] * u.values[i].exp()).sum();
    let bnd = ops
        .boundary_mass
        .iter()
        .zip(&problem.coef.h)
        .map(|(bm, h)| (0..problem.n()).map(|i| bm[i] * h[i] * (0.5 * u.values[i]).exp()).sum())
        .collect();
    (area, bnd)
}

/// Solves along a decreasing `eps` schedule. Each step is warm-started by Newton from
/// the previous solution; `fresh` supplies a mountain-pass solve when the warm start
/// fails or for the first step.
pub fn continuation<F>(problem: &Problem, opts: &SolveOptions, mut fresh: F) -> Result<ContinuationReport>
where
    F: FnMut(f64) -> Result<SolveReport>,
{
    let mut steps: Vec<ContinuationStep> = Vec::new();
    for &eps in &opts.eps_schedule {
        let mut warm = false;
        let mut rep = None;
        if let Some(prev) = steps.last() {
            let r = find_critical(problem, eps, &prev.report.state, opts)?;
            if r.converged && r.index.is_some_and(|i| i <= 1) {
                warm = true;
                rep = Some(r);
            }
        }
        let mut report = match rep {
            Some(r) => r,
            None => fresh(eps)?,
        };
        report.method = Method::Continuation;
        let sup_u = report.state.max();
        let (area_mass, boundary_mass) = masses(problem, &report.state);
        let pert = problem.with_spec(perturb(&problem.spec, eps)?)?;
        let gb_residual = pert.gauss_bonnet_residual(&report.state)?;
        let chi_gen = pert.energy(&report.state, 0.0)?.chi_gen;
        let blow = report.blowup_flag || sup_u > opts.blowup_threshold;
        let ok = report.converged;
        steps.push(ContinuationStep { eps, report, sup_u, area_mass, boundary_mass, gb_residual, chi_gen, warm_started: warm });
        if blow {
            return Ok(ContinuationReport { steps, blowup: true, verdict: format!("blow-up: sup u exceeded at eps = {eps}") });
        }
        if !ok {
            return Ok(ContinuationReport { steps, blowup: false, verdict: format!("solve failed at eps = {eps}") });
        }
    }
    let sups: Vec<f64> = steps.iter().map(|s| s.sup_u).collect();
    let verdict = match sups.len() {
        n if n >= 2 => format!("bounded: sup u variation {:.3e} over the last two steps", (sups[n - 1] - sups[n - 2]).abs()),
        _ => "bounded".into(),
    };
    Ok(ContinuationReport { steps, blowup: false, verdict })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointOptions {
    /// Normal offset of the test function's center outside the boundary.
    pub q2: f64,
    /// Decreasing values of `a = sqrt(mu^2 q2^2 - 1)`.
    pub a_schedule: Vec<f64>,
    /// `delta = delta_factor * oint e^{u0/2}`.
    pub delta_factor: f64,
    /// Required drop of `I_eps(u1)` below `I_eps(u0)`.
    pub energy_gap: f64,
}

impl Default for EndpointOptions {
    fn default() -> Self {
        Self { q2: 0.2, a_schedule: (0..40).map(|k| 2.0 * 0.8f64.powi(k)).collect(), delta_factor: 2.0, energy_gap: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleSearch {
    /// Local minimum of `I_eps` near the constant states `c + b`.
    pub u0: SolveReport,
    pub u1: EndpointReport,
    pub point: BoundaryPoint,
    pub mountain_pass: MountainPassReport,
}

/// Best constant shift `c` of the normalizing offset, by golden-section search on `[-40, 5]`.
pub fn best_constant(problem: &Problem, eps: f64) -> Result<f64> {
    let domain = problem.mesh.spec;
    let base = StateField::interpolate(&problem.mesh, |x| normalizing_offset(&domain, x));
    let f = |c: f64| problem.energy(&base.add_constant(c), eps).map(|e| e.total);
    let (mut a, mut b) = (-40.0f64, 5.0f64);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > 1e-6 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// The full saddle construction: `u0` is the local minimum of `I_eps` reached from the
/// best constant state, `u1` a concentrated test function at `point` (where `D > 1`),
/// and the mountain pass runs between them.
pub fn saddle_search(
    problem: &Problem,
    eps: f64,
    point: &BoundaryPoint,
    endpoints: &EndpointOptions,
    opts: &SolveOptions,
) -> Result<SaddleSearch> {
    let domain = problem.mesh.spec;
    let c = best_constant(problem, eps)?;
    let init = StateField::interpolate(&problem.mesh, |x| c + normalizing_offset(&domain, x));
    let u0 = minimize(problem, eps, &init, opts)?;
    if !u0.converged {
        return Err(Error::NotConverged(format!("no local minimum near constants: {}", u0.message)));
    }
    let delta = endpoints.delta_factor * problem.boundary_exp_integral(&u0.state);
    let below = u0.energy.total - endpoints.energy_gap;
    let u1 = build_u1(problem, eps, point, endpoints.q2, &endpoints.a_schedule, delta, below)?;
    let mountain_pass = mountain_pass(problem, eps, &u0.state, &u1.state, delta, opts)?;
    Ok(SaddleSearch { u0, u1, point: *point, mountain_pass })
}
