//! Line-search minimizers over flat coordinate vectors.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lbfgs,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    /// Stop once the l2 norm of the gradient is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    /// LBFGS history length.
    pub history: usize,
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { tol: 1e-8, max_iter: 5000, method: Method::Lbfgs, history: 10, armijo: 1e-4, max_halvings: 40 }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || self.history == 0 || !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(Error::Input("solver options need tol > 0, max_iter > 0, history > 0, 0 < armijo < 0.5".into()));
        }
        Ok(())
    }
}

/// Objective value, gradient and an admissibility flag at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub admissible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Starting energy plus the accepted decreases. A decrease below summation
    /// round-off is measured by the trapezoid rule on directional derivatives.
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub halvings: usize,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
    pub reason: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn nrm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes from `x0`. `first_step` bounds the largest coordinate change of
/// the first trial step (and of every steepest-descent restart).
pub fn minimize(f: &dyn Fn(&[f64]) -> Result<Evaluation>, x0: Vec<f64>, opts: &MinimizeOptions, first_step: f64) -> Result<Minimum> {
    opts.validate()?;
    let mut evals = 1;
    let mut cur = f(&x0)?;
    if !cur.admissible {
        return Err(Error::Evaluation("starting point is not admissible".into()));
    }
    let mut x = x0;
    let mut trace = vec![TraceRow { iteration: 0, energy: cur.value, grad_norm: nrm(&cur.gradient), step: 0.0, halvings: 0 }];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut d_prev: Vec<f64> = Vec::new();
    let mut g_prev: Vec<f64> = Vec::new();
    let mut iter = 0;
    // Near round-off the decrease is taken from the trapezoid rule on the
    // directional derivatives (exact for quadratics), provided the directly
    // summed energies agree with it to within `noise`.
    let noise = 1e-12;
    let mut level = cur.value;
    loop {
        let gn = nrm(&cur.gradient);
        if gn <= opts.tol {
            return Ok(done(x, cur, iter, evals, trace, Termination::Converged));
        }
        if iter >= opts.max_iter {
            return Ok(done(x, cur, iter, evals, trace, Termination::MaxIter));
        }
        let g = &cur.gradient;
        let steepest = |g: &[f64]| -> Vec<f64> {
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let s = if gmax > 0.0 { (first_step / gmax).min(1.0) } else { 1.0 };
            g.iter().map(|v| -s * v).collect()
        };
        let mut d = match opts.method {
            Method::Lbfgs => {
                if hist.is_empty() {
                    steepest(g)
                } else {
                    two_loop(g, &hist)
                }
            }
            Method::Cg => {
                if d_prev.is_empty() {
                    steepest(g)
                } else {
                    // Polak-Ribiere+
                    let y: Vec<f64> = g.iter().zip(&g_prev).map(|(a, b)| a - b).collect();
                    let beta = (dot(g, &y) / dot(&g_prev, &g_prev)).max(0.0);
                    g.iter().zip(&d_prev).map(|(gi, di)| -gi + beta * di).collect()
                }
            }
        };
        let mut slope = dot(g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = steepest(g);
            slope = dot(g, &d);
        }
        let mut alpha = 1.0;
        let mut halvings = 0;
        let next = loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let trial = f(&xn);
            evals += 1;
            let decrease = match &trial {
                Ok(e) if e.admissible && e.value.is_finite() => {
                    let direct = e.value - cur.value;
                    let trapezoid = 0.5 * alpha * (slope + dot(&e.gradient, &d));
                    if direct <= opts.armijo * alpha * slope {
                        Some(direct)
                    } else if trapezoid <= opts.armijo * alpha * slope && (direct - trapezoid).abs() <= noise * cur.value.abs().max(1.0) {
                        Some(trapezoid)
                    } else {
                        None
                    }
                }
                Ok(_) | Err(Error::Evaluation(_)) => None,
                Err(e) => return Err(Error::Numeric(format!("objective failed during line search: {e}"))),
            };
            if let Some(de) = decrease {
                level += de;
                break (xn, trial.expect("checked above"));
            }
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::Numeric(format!(
                    "line search stagnated after {} halvings at iteration {iter}: energy {:e}, |grad| {gn:e}, directional derivative {slope:e}",
                    opts.max_halvings, cur.value
                )));
            }
            alpha *= 0.5;
        };
        let (xn, en) = next;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = en.gradient.iter().zip(&cur.gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if opts.method == Method::Lbfgs && sy > 1e-300 {
            if hist.len() == opts.history {
                hist.pop_front();
            }
            hist.push_back((s.clone(), y, 1.0 / sy));
        }
        d_prev = s.iter().map(|v| v / alpha).collect();
        g_prev = std::mem::take(&mut cur.gradient);
        iter += 1;
        trace.push(TraceRow { iteration: iter, energy: level, grad_norm: nrm(&en.gradient), step: alpha * nrm(&d), halvings });
        x = xn;
        cur = en;
    }
}

fn done(x: Vec<f64>, e: Evaluation, iterations: usize, evaluations: usize, trace: Vec<TraceRow>, reason: Termination) -> Minimum {
    let grad_norm = nrm(&e.gradient);
    Minimum { x, value: e.value, gradient: e.gradient, grad_norm, iterations, evaluations, trace, reason }
}

fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let (s, y, _) = hist.back().expect("nonempty history");
    let gamma = dot(s, y) / dot(y, y);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
