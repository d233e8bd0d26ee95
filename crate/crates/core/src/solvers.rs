//! Critical-point finders for the one-variable energy.
//!
//! All three solvers descend along the H^1 Riesz gradient (the raw dual
//! vector is mesh-dependent; the Riesz lift gives mesh-independent steps).
//! Convergence requires both the Riesz gradient norm below `tol` and the
//! dual coefficient vector below `10 tol` in sup norm, so every converged
//! report doubles as a weak-solution certificate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::energy::{GradientEval, Problem};
use crate::error::{Error, Result};
use crate::grid::RadialField;

/// Armijo sufficient-decrease parameter.
const ARMIJO_SLOPE: f64 = 0.25;
/// Backtracking shrink factor.
const ARMIJO_SHRINK: f64 = 0.5;
/// Smallest step before the line search declares stagnation.
const MIN_STEP: f64 = 1e-18;
/// Dual sup-norm certificate factor relative to `tol`.
const DUAL_CERT_FACTOR: f64 = 10.0;
/// Maximum number of retained trace points.
const TRACE_CAP: usize = 256;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
}

/// Result of one solve: the solution pair, certificates, and a decimated
/// iteration trace. The fields themselves go to CSV, not JSON.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: RadialField,
    #[serde(skip)]
    pub phi: RadialField,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
    pub invariant_residuals: BTreeMap<String, f64>,
}

struct TraceBuilder {
    points: Vec<TracePoint>,
    stride: usize,
}

impl TraceBuilder {
    fn new(max_iter: usize) -> Self {
        Self {
            points: Vec::new(),
            stride: (max_iter / TRACE_CAP).max(1),
        }
    }

    fn push(&mut self, iter: usize, energy: f64, grad_norm: f64) {
        if iter % self.stride == 0 {
            self.points.push(TracePoint { iter, energy, grad_norm });
        }
    }

    fn finish(mut self, iter: usize, energy: f64, grad_norm: f64) -> Vec<TracePoint> {
        self.points.push(TracePoint { iter, energy, grad_norm });
        self.points
    }
}

fn finish_report(
    problem: &Problem,
    u: RadialField,
    energy: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<TracePoint>,
) -> Result<SolveReport> {
    let checks = crate::energy::solution_checks(problem, &u)?;
    let phi = problem.solve_phi(&u)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("maxwell_identity_rel".into(), checks.maxwell_identity_rel);
    residuals.insert("phi_min".into(), checks.phi_min);
    residuals.insert("u_min".into(), checks.u_min);
    residuals.insert("dual_sup".into(), checks.dual_sup);
    Ok(SolveReport {
        solution: u,
        phi,
        energy,
        grad_norm: checks.grad_norm,
        iterations,
        converged,
        trace,
        invariant_residuals: residuals,
    })
}

/// Armijo backtracking along `dir` from `u`. Returns the accepted point and
/// its energy, or None on stagnation. `slope` must be E'(u)(dir) < 0.
fn line_search(
    problem: &Problem,
    u: &RadialField,
    energy: f64,
    dir: &RadialField,
    slope: f64,
    t_init: f64,
) -> Result<Option<(RadialField, f64, f64)>> {
    let mut t = t_init;
    while t >= MIN_STEP {
        let mut cand = u.clone();
        cand.axpy(t, dir);
        let e_new = problem.energy(&cand)?;
        // round-off guard: near the floor the decrease condition drowns in
        // the noise of two O(1) energies
        let noise = 4.0 * f64::EPSILON * (energy.abs() + e_new.abs());
        if e_new <= energy + ARMIJO_SLOPE * t * slope + noise {
            return Ok(Some((cand, e_new, t)));
        }
        t *= ARMIJO_SHRINK;
    }
    Ok(None)
}

fn converged(grad: &GradientEval, tol: f64) -> bool {
    grad.grad_norm < tol && grad.dual_sup < DUAL_CERT_FACTOR * tol
}

/// Unconstrained descent on E_lambda with Armijo backtracking.
///
/// Hitting `max_iter` or a stagnating line search yields an unconverged
/// report, not an error.
pub fn minimize(
    problem: &Problem,
    u_init: &RadialField,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    problem.grid.check_field(u_init)?;
    let mut u = u_init.clone();
    u.zero_dirichlet();
    let mut energy = problem.energy(&u)?;
    let mut trace = TraceBuilder::new(max_iter);
    let mut t_prev = 1.0_f64;

    for iter in 0..max_iter {
        let grad = problem.gradient(&u)?;
        trace.push(iter, energy, grad.grad_norm);
        if converged(&grad, tol) {
            let trace = trace.finish(iter, energy, grad.grad_norm);
            return finish_report(problem, u, energy, iter, true, trace);
        }
        let dir = grad.riesz.scaled(-1.0);
        let slope = -problem.grid.h1_inner(&grad.riesz, &grad.riesz)?;
        let t_init = (2.0 * t_prev).clamp(MIN_STEP, 4.0);
        match line_search(problem, &u, energy, &dir, slope, t_init)? {
            Some((next, e_new, t)) => {
                debug_assert!(e_new <= energy + 1e-12 * energy.abs().max(1.0));
                u = next;
                energy = e_new;
                t_prev = t;
            }
            None => {
                let trace = trace.finish(iter, energy, grad.grad_norm);
                return finish_report(problem, u, energy, iter, false, trace);
            }
        }
    }
    let grad = problem.gradient(&u)?;
    let done = converged(&grad, tol);
    let trace = trace.finish(max_iter, energy, grad.grad_norm);
    finish_report(problem, u, energy, max_iter, done, trace)
}

/// Projected-gradient norm: || u - clamp(u - riesz, [-b, b]) ||_{H^1}.
fn projected_residual(problem: &Problem, u: &RadialField, grad: &GradientEval, b: f64) -> Result<(RadialField, f64)> {
    let mut moved = u.clone();
    moved.axpy(-1.0, &grad.riesz);
    let projected = moved.clamp_abs(b);
    let diff = u.sub(&projected);
    let norm = problem.grid.h1_norm(&diff)?;
    Ok((diff, norm))
}

/// Projected descent over the box W^b = { ||u||_inf <= b }.
///
/// Steps are clamped pointwise after each move; convergence is measured by
/// the projected-gradient residual. When the box is inactive at the exit
/// point the dual certificate applies as in `minimize`.
pub fn minimize_box(
    problem: &Problem,
    b: f64,
    u_init: &RadialField,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("box bound must be positive, got {b}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    problem.grid.check_field(u_init)?;
    let mut u = u_init.clamp_abs(b);
    u.zero_dirichlet();
    let mut energy = problem.energy(&u)?;
    let mut trace = TraceBuilder::new(max_iter);
    let mut t_prev = 1.0_f64;

    for iter in 0..max_iter {
        let grad = problem.gradient(&u)?;
        let (_, pg_norm) = projected_residual(problem, &u, &grad, b)?;
        trace.push(iter, energy, pg_norm);
        let interior = u.sup_norm() < b - DUAL_CERT_FACTOR * tol;
        if pg_norm < tol && (!interior || grad.dual_sup < DUAL_CERT_FACTOR * tol) {
            let trace = trace.finish(iter, energy, pg_norm);
            let mut report = finish_report(problem, u, energy, iter, true, trace)?;
            report.grad_norm = pg_norm;
            return Ok(report);
        }

        // backtracking over the projected arc u(t) = clamp(u - t g)
        let mut t = (2.0 * t_prev).clamp(MIN_STEP, 4.0);
        let mut accepted = None;
        while t >= MIN_STEP {
            let mut moved = u.clone();
            moved.axpy(-t, &grad.riesz);
            let cand = moved.clamp_abs(b);
            let step = cand.sub(&u);
            let decrease = problem.directional_derivative(&grad, &step);
            let e_new = problem.energy(&cand)?;
            let noise = 4.0 * f64::EPSILON * (energy.abs() + e_new.abs());
            if e_new <= energy + ARMIJO_SLOPE * decrease + noise && decrease <= 0.0 {
                accepted = Some((cand, e_new, t));
                break;
            }
            t *= ARMIJO_SHRINK;
        }
        match accepted {
            Some((next, e_new, t)) => {
                u = next;
                energy = e_new;
                t_prev = t;
            }
            None => {
                let trace = trace.finish(iter, energy, pg_norm);
                let mut report = finish_report(problem, u, energy, iter, false, trace)?;
                report.grad_norm = pg_norm;
                return Ok(report);
            }
        }
    }
    let grad = problem.gradient(&u)?;
    let (_, pg_norm) = projected_residual(problem, &u, &grad, b)?;
    let trace = trace.finish(max_iter, energy, pg_norm);
    let mut report = finish_report(problem, u, energy, max_iter, pg_norm < tol, trace)?;
    report.grad_norm = pg_norm;
    Ok(report)
}

/// Verify inf E > 0 on a sampled H^1 sphere of radius `ring_radius` around
/// the origin, shrinking the radius a few times if a sample dips below 0.
fn verify_ring_condition(
    problem: &Problem,
    samples: &[RadialField],
    mut ring_radius: f64,
) -> Result<f64> {
    for _ in 0..8 {
        let mut ok = true;
        let mut worst = f64::INFINITY;
        for dir in samples {
            let norm = problem.grid.h1_norm(dir)?;
            if norm == 0.0 {
                continue;
            }
            let on_ring = dir.scaled(ring_radius / norm);
            let e = problem.energy(&on_ring)?;
            worst = worst.min(e);
            if e <= 0.0 {
                ok = false;
                break;
            }
        }
        if ok && worst.is_finite() {
            return Ok(ring_radius);
        }
        ring_radius *= 0.5;
    }
    Err(Error::RingCondition(format!(
        "no sampled sphere of radius >= {ring_radius:.3e} kept the energy positive"
    )))
}

/// Equal-arclength redistribution (H^1 polyline metric) that keeps the
/// endpoints and pins node `anchor` in place.
fn retension(
    problem: &Problem,
    path: &[RadialField],
    anchor: usize,
) -> Result<Vec<RadialField>> {
    let redistribute = |nodes: &[RadialField]| -> Result<Vec<RadialField>> {
        let m = nodes.len();
        if m <= 2 {
            return Ok(nodes.to_vec());
        }
        let mut cum = vec![0.0_f64; m];
        for k in 1..m {
            let seg = nodes[k].sub(&nodes[k - 1]);
            cum[k] = cum[k - 1] + problem.grid.h1_norm(&seg)?;
        }
        let total = cum[m - 1];
        if total <= 0.0 {
            return Ok(nodes.to_vec());
        }
        let mut out = Vec::with_capacity(m);
        out.push(nodes[0].clone());
        let mut seg = 1usize;
        for k in 1..m - 1 {
            let target = total * k as f64 / (m - 1) as f64;
            while seg < m - 1 && cum[seg] < target {
                seg += 1;
            }
            let span = (cum[seg] - cum[seg - 1]).max(f64::MIN_POSITIVE);
            let t = (target - cum[seg - 1]) / span;
            let mut node = nodes[seg - 1].scaled(1.0 - t);
            node.axpy(t, &nodes[seg]);
            out.push(node);
        }
        out.push(nodes[m - 1].clone());
        Ok(out)
    };

    let mut out = redistribute(&path[..=anchor])?;
    let tail = redistribute(&path[anchor..])?;
    out.extend(tail.into_iter().skip(1));
    Ok(out)
}

/// Saddle polish: descend G(u) = 1/2 ||riesz(u)||^2 using finite-difference
/// Hessian actions, which drives the gradient itself to zero near a
/// nondegenerate critical point.
fn polish_saddle(
    problem: &Problem,
    u_start: &RadialField,
    tol: f64,
    max_iter: usize,
) -> Result<(RadialField, usize)> {
    let mut u = u_start.clone();
    let mut grad = problem.gradient(&u)?;
    let mut iters = 0;
    for _ in 0..max_iter {
        iters += 1;
        if converged(&grad, tol) {
            break;
        }
        let g_norm = problem.grid.h1_norm(&grad.riesz)?;
        if g_norm == 0.0 {
            break;
        }
        // direction -H g by central differences of the Riesz gradient map
        let eps = 1e-6 / g_norm.max(1e-12);
        let mut up = u.clone();
        up.axpy(eps, &grad.riesz);
        let mut dn = u.clone();
        dn.axpy(-eps, &grad.riesz);
        let gp = problem.gradient(&up)?;
        let gn = problem.gradient(&dn)?;
        let mut hg = gp.riesz.sub(&gn.riesz);
        hg.scale(1.0 / (2.0 * eps));

        let g_obj = 0.5 * g_norm * g_norm;
        let slope = -problem.grid.h1_inner(&hg, &grad.riesz)?;
        if slope >= 0.0 {
            break;
        }
        let mut t = 1.0_f64;
        let mut moved = false;
        while t >= MIN_STEP {
            let mut cand = u.clone();
            cand.axpy(-t, &hg);
            let cg = problem.gradient(&cand)?;
            let c_norm = problem.grid.h1_norm(&cg.riesz)?;
            let c_obj = 0.5 * c_norm * c_norm;
            if c_obj <= g_obj + ARMIJO_SLOPE * t * slope + 4.0 * f64::EPSILON * g_obj {
                u = cand;
                grad = cg;
                moved = true;
                break;
            }
            t *= ARMIJO_SHRINK;
        }
        if !moved {
            break;
        }
    }
    Ok((u, iters))
}

/// Numerical mountain-pass: a discretized path from 0 to `u_low` is relaxed
/// by descending its maximal-energy interior node and re-tensioning, then
/// the best candidate is polished to a gradient certificate.
///
/// `ring_samples` are direction fields used to verify the ring condition;
/// they are normalized internally.
pub fn mountain_pass(
    problem: &Problem,
    u_low: &RadialField,
    path_nodes: usize,
    ring_samples: &[RadialField],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if path_nodes < 3 {
        return Err(Error::Config(format!(
            "mountain pass needs at least 3 path nodes, got {path_nodes}"
        )));
    }
    problem.grid.check_field(u_low)?;
    let e_low = problem.energy(u_low)?;
    if !(e_low < 0.0) {
        return Err(Error::Config(format!(
            "mountain pass requires a negative-energy endpoint, got E = {e_low}"
        )));
    }
    if ring_samples.is_empty() {
        return Err(Error::RingCondition("no ring samples supplied".into()));
    }
    let low_norm = problem.grid.h1_norm(u_low)?;
    verify_ring_condition(problem, ring_samples, 0.1 * low_norm.min(1.0))?;

    // straight-line initial path
    let mut path: Vec<RadialField> = (0..path_nodes)
        .map(|k| u_low.scaled(k as f64 / (path_nodes - 1) as f64))
        .collect();
    let mut trace = TraceBuilder::new(max_iter);
    let mut stagnant = false;

    let mut best_candidate: Option<RadialField> = None;
    let mut iterations = 0;
    for iter in 0..max_iter {
        iterations = iter;
        // maximal-energy interior node; ties resolved to the lowest index
        let mut k_max = 1;
        let mut e_max = f64::NEG_INFINITY;
        for (k, node) in path.iter().enumerate().take(path_nodes - 1).skip(1) {
            let e = problem.energy(node)?;
            if e > e_max {
                e_max = e;
                k_max = k;
            }
        }
        let grad = problem.gradient(&path[k_max])?;
        trace.push(iter, e_max, grad.grad_norm);
        best_candidate = Some(path[k_max].clone());
        if converged(&grad, tol) {
            let trace = trace.finish(iter, e_max, grad.grad_norm);
            return finish_report(problem, path[k_max].clone(), e_max, iter, true, trace);
        }
        // loose path phase exit: hand over to the polish once the path has
        // localized the pass
        if grad.grad_norm < 1e3 * tol {
            break;
        }

        let dir = grad.riesz.scaled(-1.0);
        let slope = -problem.grid.h1_inner(&grad.riesz, &grad.riesz)?;
        match line_search(problem, &path[k_max], e_max, &dir, slope, 1.0)? {
            Some((next, _, _)) => {
                path[k_max] = next;
            }
            None => {
                stagnant = true;
                break;
            }
        }
        path = retension(problem, &path, k_max)?;
    }

    // polish the saddle candidate to the full certificate
    let candidate = best_candidate.expect("path loop ran at least once");
    let (refined, extra) = polish_saddle(problem, &candidate, tol, max_iter)?;
    let grad = problem.gradient(&refined)?;
    let energy = problem.energy(&refined)?;
    let done = converged(&grad, tol) && !stagnant;
    let trace = trace.finish(iterations + extra, energy, grad.grad_norm);
    finish_report(problem, refined, energy, iterations + extra, done, trace)
}
