//! Limited-memory BFGS with a strong Wolfe line search, plus the seeded
//! uniform initializer used for random-start VQE.
//!
//! The line search only accepts points satisfying sufficient decrease, so the
//! recorded objective never increases. When no acceptable point is found the
//! run stops with [`Termination::LineSearchFailure`] and returns the best point
//! seen so far.
//!
//! Random initialization draws from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`; both are specified bit-for-bit and platform independent.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once the Euclidean gradient norm falls to this value.
    pub gradient_tolerance: f64,
    /// Stop once `f_prev - f <= function_tolerance * max(|f_prev|, |f|, 1)`.
    pub function_tolerance: f64,
    /// Number of correction pairs kept.
    pub history: usize,
    /// Sufficient-decrease constant `c1`.
    pub armijo: f64,
    /// Curvature constant `c2`.
    pub curvature: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_search: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            gradient_tolerance: 1e-6,
            function_tolerance: 1e-10,
            history: 10,
            armijo: 1e-4,
            curvature: 0.9,
            max_line_search: 30,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("optimizer config: {what}")));
        if !(self.gradient_tolerance > 0.0) || !(self.function_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.history == 0 {
            return bad("history must be at least 1");
        }
        if !(0.0 < self.armijo && self.armijo < self.curvature && self.curvature < 1.0) {
            return bad("line-search constants need 0 < armijo < curvature < 1");
        }
        if self.max_line_search == 0 {
            return bad("max_line_search must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientConverged,
    FunctionConverged,
    MaxIterations,
    LineSearchFailure,
    /// The objective produced NaN or infinity; only seen on aborted traces.
    NonFiniteObjective,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradientConverged => "gradient-converged",
            Termination::FunctionConverged => "function-converged",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailure => "line-search-failure",
            Termination::NonFiniteObjective => "non-finite-objective",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptTrace {
    /// Iteration 0 is the starting point.
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Objective/gradient evaluations, line-search trials included.
    pub evaluations: usize,
}

impl OptTrace {
    /// CSV with header `iter,objective,grad_norm,step`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,objective,grad_norm,step\n");
        for r in &self.records {
            writeln!(out, "{},{:.11e},{:.11e},{:.11e}", r.iteration, r.objective, r.grad_norm, r.step)
                .expect("write to String");
        }
        out
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub trace: OptTrace,
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

struct Evaluator<F> {
    objective: F,
    count: usize,
}

impl<F> Evaluator<F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: Vec<f64>) -> Result<std::result::Result<Point, Vec<f64>>> {
        self.count += 1;
        let (f, g) = (self.objective)(&x)?;
        if g.len() != x.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                found: g.len(),
            });
        }
        if f.is_finite() && g.iter().all(|v| v.is_finite()) {
            Ok(Ok(Point { x, f, g }))
        } else {
            Ok(Err(x))
        }
    }
}

/// Minimizes `objective` (returning value and gradient) from `x0`.
///
/// Returns the best point seen. A non-finite objective or gradient aborts with
/// [`Error::NonFiniteObjective`] carrying the trace up to that point.
pub fn minimize<F>(objective: F, x0: &[f64], config: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    config.validate()?;
    if let Some(v) = x0.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite starting point component {v}")));
    }
    let mut ev = Evaluator { objective, count: 0 };
    let mut records = Vec::new();
    let abort = |records: Vec<IterationRecord>, count: usize| Error::NonFiniteObjective {
        trace: Box::new(OptTrace {
            records,
            termination: Termination::NonFiniteObjective,
            evaluations: count,
        }),
    };

    let mut cur = match ev.eval(x0.to_vec())? {
        Ok(p) => p,
        Err(_) => return Err(abort(records, ev.count)),
    };
    records.push(IterationRecord {
        iteration: 0,
        objective: cur.f,
        grad_norm: norm(&cur.g),
        step: 0.0,
    });

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.history);
    let mut termination = if norm(&cur.g) <= config.gradient_tolerance {
        Termination::GradientConverged
    } else {
        Termination::MaxIterations
    };

    let mut iteration = 0;
    while termination == Termination::MaxIterations && iteration < config.max_iterations {
        iteration += 1;
        let mut dir = two_loop(&cur.g, &history);
        let mut slope = dot(&cur.g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = cur.g.iter().map(|v| -v).collect();
            slope = -dot(&cur.g, &cur.g);
        }
        let initial_step = if history.is_empty() {
            (1.0 / norm(&dir)).min(1.0)
        } else {
            1.0
        };

        let outcome = line_search(&mut ev, &cur, &dir, slope, initial_step, config)?;
        let (next, step) = match outcome {
            Search::Found(p, a) => (p, a),
            Search::Failed => {
                termination = Termination::LineSearchFailure;
                break;
            }
            Search::NonFinite => return Err(abort(records, ev.count)),
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == config.history {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let decrease = cur.f - next.f;
        let scale = cur.f.abs().max(next.f.abs()).max(1.0);
        cur = next;
        let gnorm = norm(&cur.g);
        records.push(IterationRecord {
            iteration,
            objective: cur.f,
            grad_norm: gnorm,
            step,
        });
        if gnorm <= config.gradient_tolerance {
            termination = Termination::GradientConverged;
        } else if decrease <= config.function_tolerance * scale {
            termination = Termination::FunctionConverged;
        }
    }

    Ok(Minimum {
        x: cur.x,
        value: cur.f,
        gradient: cur.g,
        trace: OptTrace {
            records,
            termination,
            evaluations: ev.count,
        },
    })
}

/// `-H g` from the stored correction pairs, `H0 = (s'y / y'y) I`.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

enum Search {
    Found(Point, f64),
    Failed,
    NonFinite,
}

/// Strong Wolfe search (bracketing then zoom with safeguarded cubic
/// interpolation). Falls back to the best sufficient-decrease point when the
/// curvature condition cannot be met within the evaluation budget.
fn line_search<F>(
    ev: &mut Evaluator<F>,
    start: &Point,
    dir: &[f64],
    slope0: f64,
    initial_step: f64,
    config: &OptimizerConfig,
) -> Result<Search>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (c1, c2) = (config.armijo, config.curvature);
    let f0 = start.f;
    let trial = |a: f64| -> Vec<f64> { start.x.iter().zip(dir).map(|(x, d)| x + a * d).collect() };
    let armijo_ok = |a: f64, f: f64| f <= f0 + c1 * a * slope0;

    // Best point with sufficient decrease, kept as a fallback.
    let mut fallback: Option<(Point, f64)> = None;
    let keep = |p: Point, a: f64, fallback: &mut Option<(Point, f64)>| {
        if fallback.as_ref().map_or(true, |(b, _)| p.f < b.f) {
            *fallback = Some((p, a));
        }
    };

    let mut budget = config.max_line_search;
    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, slope0);
    let mut a = initial_step;
    let mut first = true;

    // Bracketing phase.
    let (mut lo, mut hi) = loop {
        if budget == 0 {
            return Ok(finish(fallback));
        }
        budget -= 1;
        let p = match ev.eval(trial(a))? {
            Ok(p) => p,
            Err(_) => return Ok(Search::NonFinite),
        };
        let d = dot(&p.g, dir);
        let fa = p.f;
        if !armijo_ok(a, fa) || (!first && fa >= f_prev) {
            break ((a_prev, f_prev, d_prev), (a, fa, d));
        }
        if d.abs() <= -c2 * slope0 {
            return Ok(Search::Found(p, a));
        }
        keep(p, a, &mut fallback);
        if d >= 0.0 {
            break ((a, fa, d), (a_prev, f_prev, d_prev));
        }
        first = false;
        a_prev = a;
        f_prev = fa;
        d_prev = d;
        a *= 2.0;
    };

    // Zoom phase: lo always satisfies sufficient decrease with f(lo) < f(hi).
    while budget > 0 {
        budget -= 1;
        let (a_lo, a_hi) = (lo.0, hi.0);
        let width = (a_hi - a_lo).abs();
        if width < 1e-16 * a_lo.abs().max(1.0) {
            break;
        }
        let mut aj = cubic_min(lo, hi).unwrap_or(0.5 * (a_lo + a_hi));
        let (left, right) = (a_lo.min(a_hi), a_lo.max(a_hi));
        if !(aj > left + 0.1 * width && aj < right - 0.1 * width) {
            aj = 0.5 * (a_lo + a_hi);
        }
        let p = match ev.eval(trial(aj))? {
            Ok(p) => p,
            Err(_) => return Ok(Search::NonFinite),
        };
        let fj = p.f;
        let dj = dot(&p.g, dir);
        if !armijo_ok(aj, fj) || fj >= lo.1 {
            hi = (aj, fj, dj);
        } else {
            if dj.abs() <= -c2 * slope0 {
                return Ok(Search::Found(p, aj));
            }
            if dj * (a_hi - a_lo) >= 0.0 {
                hi = lo;
            }
            lo = (aj, fj, dj);
            keep(p, aj, &mut fallback);
        }
    }
    Ok(finish(fallback))
}

fn finish(fallback: Option<(Point, f64)>) -> Search {
    match fallback {
        Some((p, a)) => Search::Found(p, a),
        None => Search::Failed,
    }
}

/// Minimizer of the cubic interpolating `(a, f, f')` at both ends.
fn cubic_min((a0, f0, d0): (f64, f64, f64), (a1, f1, d1): (f64, f64, f64)) -> Option<f64> {
    let d1_ = d0 + d1 - 3.0 * (f0 - f1) / (a0 - a1);
    let disc = d1_ * d1_ - d0 * d1;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (a1 - a0).signum() * disc.sqrt();
    let denom = d1 - d0 + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let a = a1 - (a1 - a0) * (d1 + d2 - d1_) / denom;
    a.is_finite().then_some(a)
}

/// `size` draws from uniform(-pi, pi), reproducible for a given seed.
pub fn random_init(size: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| loop {
            let v = -PI + 2.0 * PI * rng.gen::<f64>();
            if v > -PI && v < PI {
                break v;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let f = x.iter().map(|v| (v - 1.0).powi(2)).sum();
        Ok((f, x.iter().map(|v| 2.0 * (v - 1.0)).collect()))
    }

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Ok((f, g))
    }

    fn tight() -> OptimizerConfig {
        OptimizerConfig {
            gradient_tolerance: 1e-10,
            function_tolerance: 1e-300,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn convex_quadratic() {
        let m = minimize(quadratic, &[0.0; 10], &tight()).unwrap();
        assert!(m.trace.iterations() <= 50);
        assert!(m.x.iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert_eq!(m.trace.termination, Termination::GradientConverged);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let m = minimize(rosenbrock, &[-1.2, 1.0], &tight()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
        let objectives: Vec<f64> = m.trace.records.iter().map(|r| r.objective).collect();
        assert!(objectives.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nan_objective_aborts_with_trace() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            if x[0] > 0.5 {
                Ok((f64::NAN, vec![0.0]))
            } else {
                Ok(((x[0] - 3.0).powi(2), vec![2.0 * (x[0] - 3.0)]))
            }
        };
        match minimize(f, &[0.0], &OptimizerConfig::default()) {
            Err(Error::NonFiniteObjective { trace }) => {
                assert_eq!(trace.termination, Termination::NonFiniteObjective);
                assert!(!trace.records.is_empty());
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn already_converged_start() {
        let m = minimize(quadratic, &[1.0; 3], &OptimizerConfig::default()).unwrap();
        assert_eq!(m.trace.termination, Termination::GradientConverged);
        assert_eq!(m.trace.iterations(), 0);
    }

    #[test]
    fn max_iterations_respected() {
        let cfg = OptimizerConfig {
            max_iterations: 3,
            ..tight()
        };
        let m = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert_eq!(m.trace.termination, Termination::MaxIterations);
        assert_eq!(m.trace.iterations(), 3);
    }

    #[test]
    fn invalid_config() {
        let cfg = OptimizerConfig {
            history: 0,
            ..OptimizerConfig::default()
        };
        assert!(minimize(quadratic, &[0.0], &cfg).is_err());
        assert!(minimize(quadratic, &[f64::NAN], &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let m = minimize(quadratic, &[0.0; 2], &OptimizerConfig::default()).unwrap();
        let csv = m.trace.to_csv();
        assert!(csv.starts_with("iter,objective,grad_norm,step\n0,"));
        assert_eq!(csv.lines().count(), m.trace.records.len() + 1);
    }

    #[test]
    fn random_init_contract() {
        assert!(random_init(0, 3).is_empty());
        assert_eq!(random_init(5, 7), random_init(5, 7));
        assert_ne!(random_init(5, 7), random_init(5, 8));
        let v = random_init(10_000, 1);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.05);
        assert!(v.iter().all(|x| *x > -PI && *x < PI));
    }
}
