//! Limited-memory BFGS with a weak-Wolfe bisection line search.
//!
//! The bisection search (expand until the curvature condition holds, bisect
//! once a step violates sufficient decrease) also behaves well on objectives
//! that are only nearly smooth, such as l1 energies with a small smoothing.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearchParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Maximum objective evaluations per search.
    pub max_evals: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self { c1: 1e-4, c2: 0.9, max_evals: 30 }
    }
}

/// Stopping rules and memory of the solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsParams {
    pub max_iters: usize,
    /// Stop when `||grad|| <= grad_tol * ||grad_0||`.
    pub grad_tol: f64,
    /// Stop when an iteration lowers the objective by less than
    /// `obj_tol * max(|f|, 1e-300)`.
    pub obj_tol: f64,
    pub memory: usize,
    pub line_search: LineSearchParams,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-6, obj_tol: 1e-10, memory: 10, line_search: LineSearchParams::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    ObjectiveTolerance,
    MaxIterations,
    /// The line search found no acceptable step; the best iterate is returned.
    LineSearchFailed,
    /// The objective or gradient became non-finite; the best iterate is returned.
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub stop: StopReason,
    /// Objective after every accepted iterate, starting with the initial one.
    pub history: Vec<f64>,
}

impl SolveReport {
    pub fn failed(&self) -> bool {
        matches!(self.stop, StopReason::LineSearchFailed | StopReason::NonFinite)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Minimizes `f` from `x0`. `f(x, grad)` returns the objective and writes the
/// gradient. Accepted iterates never increase the objective.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, params: &LbfgsParams) -> Result<(Vec<f64>, SolveReport)>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let dim = x0.len();
    let mut g0 = vec![0.0; dim];
    let f0 = f(&x0, &mut g0)?;
    let mut evaluations = 1;
    let mut report = SolveReport {
        iterations: 0,
        evaluations,
        initial_objective: f0,
        final_objective: f0,
        stop: StopReason::MaxIterations,
        history: vec![f0],
    };
    if !f0.is_finite() || g0.iter().any(|v| !v.is_finite()) {
        report.stop = StopReason::NonFinite;
        return Ok((x0, report));
    }
    let g0_norm = norm(&g0);
    let mut cur = Point { x: x0, f: f0, g: g0 };
    if g0_norm == 0.0 {
        report.stop = StopReason::GradientTolerance;
        return Ok((cur.x, report));
    }

    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(params.memory);
    let mut direction = vec![0.0; dim];
    let mut alpha = vec![0.0; params.memory.max(1)];

    for iter in 0..params.max_iters {
        // two-loop recursion
        direction.iter_mut().zip(&cur.g).for_each(|(d, g)| *d = -g);
        for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
            alpha[i] = rho * dot(s, &direction);
            direction.iter_mut().zip(y).for_each(|(d, yv)| *d -= alpha[i] * yv);
        }
        let scale = match pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / norm(&cur.g),
        };
        direction.iter_mut().for_each(|d| *d *= scale);
        for (i, (s, y, rho)) in pairs.iter().enumerate() {
            let b = rho * dot(y, &direction);
            direction.iter_mut().zip(s).for_each(|(d, sv)| *d += (alpha[i] - b) * sv);
        }
        let mut slope = dot(&direction, &cur.g);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            pairs.clear();
            let s = 1.0 / norm(&cur.g);
            direction.iter_mut().zip(&cur.g).for_each(|(d, g)| *d = -s * g);
            slope = dot(&direction, &cur.g);
        }

        let (next, evals) = line_search(&mut f, &cur, &direction, slope, &params.line_search)?;
        evaluations += evals;
        report.evaluations = evaluations;
        let Some(next) = next else {
            report.stop = if cur.f.is_finite() { StopReason::LineSearchFailed } else { StopReason::NonFinite };
            break;
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if pairs.len() == params.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let decrease = cur.f - next.f;
        debug_assert!(decrease >= 0.0);
        cur = next;
        report.iterations = iter + 1;
        report.history.push(cur.f);
        report.final_objective = cur.f;

        if norm(&cur.g) <= params.grad_tol * g0_norm {
            report.stop = StopReason::GradientTolerance;
            break;
        }
        if decrease <= params.obj_tol * cur.f.abs().max(1e-300) {
            report.stop = StopReason::ObjectiveTolerance;
            break;
        }
    }
    report.final_objective = cur.f;
    Ok((cur.x, report))
}

/// Weak-Wolfe bisection. Returns the accepted point, or the best point
/// satisfying sufficient decrease when curvature is never met, or `None`.
fn line_search<F>(
    f: &mut F,
    cur: &Point,
    dir: &[f64],
    slope: f64,
    p: &LineSearchParams,
) -> Result<(Option<Point>, usize)>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut t = 1.0;
    let mut best: Option<Point> = None;
    let mut evals = 0;
    while evals < p.max_evals {
        let x: Vec<f64> = cur.x.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        let mut g = vec![0.0; x.len()];
        let fx = f(&x, &mut g)?;
        evals += 1;
        let finite = fx.is_finite() && g.iter().all(|v| v.is_finite());
        if !finite || fx > cur.f + p.c1 * t * slope || fx >= cur.f {
            hi = t;
        } else {
            let curv = dot(&g, dir);
            let point = Point { x, f: fx, g };
            if curv < p.c2 * slope {
                lo = t;
                if best.as_ref().map_or(true, |b| point.f < b.f) {
                    best = Some(point);
                }
            } else {
                return Ok((Some(point), evals));
            }
        }
        t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo.max(t) };
        if hi.is_finite() && (hi - lo) <= 1e-16 * hi {
            break;
        }
    }
    Ok((best, evals))
}
