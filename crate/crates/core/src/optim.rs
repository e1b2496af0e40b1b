//! Box-constrained limited-memory BFGS.
//!
//! Each iteration fixes the variables sitting on a bound with the gradient
//! pushing outward, builds a quasi-Newton direction over the remaining free
//! variables from the last `m` curvature pairs, and runs a projected
//! backtracking line search with an Armijo test. Every accepted iterate
//! strictly lowers the objective and every evaluated point lies in the box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbfgsbOptions {
    /// Number of stored curvature pairs.
    pub m: usize,
    /// Stop when `(f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1) <= ftol`.
    pub ftol: f64,
    /// Stop when the projected gradient's largest component is `<= pgtol`.
    pub pgtol: f64,
    /// Finite-difference step.
    pub eps: f64,
    pub maxfun: usize,
    pub maxiter: usize,
    /// Trial points per line search.
    pub maxls: usize,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        Self {
            m: 10,
            ftol: 1e-7,
            pgtol: 1e-5,
            eps: 1e-8,
            maxfun: 15000,
            maxiter: 15000,
            maxls: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Ftol,
    Pgtol,
    /// Iteration or evaluation cap.
    Maxiter,
}

/// Closed interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u), "empty interval");
        Self { lower, upper }
    }

    pub fn unbounded(n: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }
}

/// Result of a minimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    /// `(iteration, objective)` for the start point and every accepted iterate.
    pub trace: Vec<(usize, f64)>,
    pub iterations: usize,
    /// Calls to the objective-and-gradient function.
    pub evaluations: usize,
    pub stop: StopReason,
}

/// Why a run ended without meeting a stopping rule.
#[derive(Debug)]
pub enum MinimizeError {
    /// No acceptable step, even along the steepest descent direction.
    LineSearch(Minimum),
    /// Objective or gradient error, including non-finite values.
    Objective(Error),
}

impl From<Error> for MinimizeError {
    fn from(e: Error) -> Self {
        MinimizeError::Objective(e)
    }
}

/// Forward-difference gradient, switching to a backward difference where a
/// forward step would leave the box.
///
/// `f0` is `f(x)`. Uses the step actually representable in floating point.
pub fn finite_diff_gradient(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    x: &[f64],
    f0: f64,
    eps: f64,
    bounds: &Bounds,
) -> Result<Vec<f64>> {
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let forward = x[i] + eps;
        probe[i] = if forward <= bounds.upper[i] { forward } else { x[i] - eps };
        let h = probe[i] - x[i];
        let fi = f(&probe)?;
        if !fi.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        grad.push((fi - f0) / h);
        probe[i] = x[i];
    }
    Ok(grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn masked_dot(a: &[f64], b: &[f64], free: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(free)
        .filter(|(_, &f)| f)
        .map(|((x, y), _)| x * y)
        .sum()
}

/// Largest component of `P(x - g) - x`.
fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: &Bounds) -> f64 {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (xi, gi))| ((xi - gi).clamp(bounds.lower[i], bounds.upper[i]) - xi).abs())
        .fold(0.0, f64::max)
}

struct Memory {
    pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>)>,
    m: usize,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        if self.m == 0 {
            return;
        }
        if self.pairs.len() == self.m {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
    }

    /// Two-loop recursion for `-H g` restricted to the free coordinates.
    fn direction(&self, g: &[f64], free: &[bool]) -> Vec<f64> {
        let mut q: Vec<f64> = g.iter().zip(free).map(|(v, &f)| if f { *v } else { 0.0 }).collect();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        let mut gamma = 1.0;
        let mut used = Vec::with_capacity(self.pairs.len());
        for (s, y) in self.pairs.iter().rev() {
            let sy = masked_dot(s, y, free);
            if sy <= f64::EPSILON * masked_dot(y, y, free) || sy <= 0.0 {
                continue;
            }
            let rho = 1.0 / sy;
            let a = rho * masked_dot(s, &q, free);
            for ((qi, yi), &f) in q.iter_mut().zip(y).zip(free) {
                if f {
                    *qi -= a * yi;
                }
            }
            if used.is_empty() {
                gamma = sy / masked_dot(y, y, free);
            }
            alphas.push(a);
            used.push((s, y, rho));
        }
        for qi in &mut q {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in used.into_iter().zip(alphas).rev() {
            let b = rho * masked_dot(y, &q, free);
            for ((qi, si), &f) in q.iter_mut().zip(s).zip(free) {
                if f {
                    *qi += (a - b) * si;
                }
            }
        }
        q.iter().map(|v| -v).collect()
    }
}

fn initial_step(memory: &Memory, d: &[f64]) -> f64 {
    if memory.pairs.is_empty() {
        let norm = dot(d, d).sqrt();
        if norm > 0.0 { (1.0 / norm).min(1.0) } else { 1.0 }
    } else {
        1.0
    }
}

type Point = (Vec<f64>, f64, Vec<f64>);

/// Projected backtracking along `d`; `None` when no trial point passes the
/// Armijo test.
#[allow(clippy::too_many_arguments)]
fn line_search(
    fg: &mut impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    x: &[f64],
    f: f64,
    g: &[f64],
    d: &[f64],
    mut step: f64,
    bounds: &Bounds,
    options: &LbfgsbOptions,
    evaluations: &mut usize,
) -> Result<Option<Point>> {
    for _ in 0..options.maxls {
        if *evaluations >= options.maxfun {
            return Ok(None);
        }
        let mut trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + step * di).collect();
        bounds.project(&mut trial);
        let slope: f64 = g.iter().zip(trial.iter().zip(x)).map(|(gi, (a, b))| gi * (a - b)).sum();
        if !(slope < 0.0) {
            return Ok(None);
        }
        *evaluations += 1;
        let (ft, gt) = fg(&trial)?;
        let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());
        if finite && ft <= f + 1e-4 * slope && ft < f {
            return Ok(Some((trial, ft, gt)));
        }
        // quadratic interpolation, kept within [0.1, 0.5] of the current step
        let ratio = if finite && ft - f - slope > 0.0 {
            -slope / (2.0 * (ft - f - slope))
        } else {
            0.1
        };
        step *= ratio.clamp(0.1, 0.5);
    }
    Ok(None)
}

/// Minimizes `fg` (objective and gradient) over the box, starting from `x0`
/// projected into it.
pub fn minimize(
    mut fg: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    x0: &[f64],
    bounds: &Bounds,
    options: &LbfgsbOptions,
) -> std::result::Result<Minimum, MinimizeError> {
    let n = x0.len();
    assert_eq!(bounds.len(), n);
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut evaluations = 1;
    let (mut f, mut g) = fg(&x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective.into());
    }
    let mut trace = vec![(0, f)];
    let mut memory = Memory {
        pairs: Default::default(),
        m: options.m,
    };
    let mut iteration = 0;

    let outcome = |x: Vec<f64>, f, trace, iterations, evaluations, stop| Minimum {
        x,
        f,
        trace,
        iterations,
        evaluations,
        stop,
    };

    loop {
        if projected_gradient_norm(&x, &g, bounds) <= options.pgtol {
            return Ok(outcome(x, f, trace, iteration, evaluations, StopReason::Pgtol));
        }
        if iteration >= options.maxiter || evaluations >= options.maxfun {
            return Ok(outcome(x, f, trace, iteration, evaluations, StopReason::Maxiter));
        }

        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lower = x[i] <= bounds.lower[i] && g[i] > 0.0;
                let at_upper = x[i] >= bounds.upper[i] && g[i] < 0.0;
                !(at_lower || at_upper)
            })
            .collect();

        let mut d = memory.direction(&g, &free);
        if dot(&d, &g) >= 0.0 {
            memory.pairs.clear();
            d = memory.direction(&g, &free);
        }
        let mut accepted = line_search(&mut fg, &x, f, &g, &d, initial_step(&memory, &d), bounds, options, &mut evaluations)?;
        if accepted.is_none() && !memory.pairs.is_empty() {
            // retry along steepest descent with a clean memory
            memory.pairs.clear();
            d = memory.direction(&g, &free);
            accepted = line_search(&mut fg, &x, f, &g, &d, initial_step(&memory, &d), bounds, options, &mut evaluations)?;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if evaluations >= options.maxfun {
                return Ok(outcome(x, f, trace, iteration, evaluations, StopReason::Maxiter));
            }
            return Err(MinimizeError::LineSearch(outcome(
                x,
                f,
                trace,
                iteration,
                evaluations,
                StopReason::Maxiter,
            )));
        };

        iteration += 1;
        trace.push((iteration, f_new));
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > f64::EPSILON * dot(&y, &y) {
            memory.push(s, y);
        }
        let decrease = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if decrease <= options.ftol {
            return Ok(outcome(x, f, trace, iteration, evaluations, StopReason::Ftol));
        }
    }
}
