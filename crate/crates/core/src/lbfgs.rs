//! Limited-memory BFGS with a strong-Wolfe line search (bracketing + zoom with
//! safeguarded cubic interpolation).

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    pub c1: f64,
    pub c2: f64,
    /// Stop once the gradient's max-norm falls below this.
    pub grad_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 20, max_iterations: 100_000, c1: 1e-4, c2: 0.9, grad_tol: 1e-15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    /// The caller's callback asked to stop.
    Callback,
    GradientSmall,
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub(crate) struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub stop: Stop,
    /// Objective after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

/// Minimizer of the cubic through `(a, fa, ga)` and `(b, fb, gb)`, kept inside
/// the interval and away from its ends.
fn cubic_step(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    let mid = 0.5 * (a + b);
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let x = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if x.is_finite() && x > lo + margin && x < hi - margin {
        x
    } else {
        mid
    }
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    g0: f64,
    c1: f64,
    c2: f64,
}

struct Trial {
    a: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> LineSearch<'_, F> {
    fn eval(&mut self, a: f64) -> Trial {
        let xa = axpy(self.x, a, self.d);
        let mut g = vec![0.0; xa.len()];
        let f = (self.f)(&xa, &mut g);
        let slope = dotv(&g, self.d);
        Trial { a, f, g, slope }
    }

    fn armijo(&self, t: &Trial) -> bool {
        t.f <= self.f0 + self.c1 * t.a * self.g0 && t.f <= self.f0
    }

    fn curvature(&self, t: &Trial) -> bool {
        t.slope.abs() <= -self.c2 * self.g0
    }

    fn run(&mut self, a_init: f64) -> Option<Trial> {
        let mut prev = Trial { a: 0.0, f: self.f0, g: Vec::new(), slope: self.g0 };
        let mut a = a_init;
        for i in 0..40 {
            let cur = self.eval(a);
            if !cur.f.is_finite() {
                a = 0.5 * (prev.a + a);
                continue;
            }
            if !self.armijo(&cur) || (i > 0 && cur.f >= prev.f) {
                return self.zoom(prev, cur);
            }
            if self.curvature(&cur) {
                return Some(cur);
            }
            if cur.slope >= 0.0 {
                return self.zoom(cur, prev);
            }
            prev = cur;
            a *= 2.0;
        }
        None
    }

    fn zoom(&mut self, mut lo: Trial, mut hi: Trial) -> Option<Trial> {
        for _ in 0..60 {
            let a = cubic_step(lo.a, lo.f, lo.slope, hi.a, hi.f, hi.slope);
            if (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(1e-300) {
                break;
            }
            let cur = self.eval(a);
            if !cur.f.is_finite() || !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Some(cur);
                }
                if cur.slope * (hi.a - lo.a) >= 0.0 {
                    hi = std::mem::replace(&mut lo, cur);
                } else {
                    lo = cur;
                }
            }
        }
        // Fall back to the best sufficient-decrease point seen, if any.
        (lo.a > 0.0 && lo.f < self.f0).then_some(lo)
    }
}

/// Minimizes `f` from `x0`. `f(x, g)` returns the value and writes the
/// gradient; `on_step(iteration, x, f)` runs after each accepted step and
/// returns `true` to stop.
pub(crate) fn minimize<F, C>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions, mut on_step: C) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    C: FnMut(usize, &[f64], f64) -> bool,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut history = vec![fx];
    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.memory);
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.memory);
    let mut rho_hist: VecDeque<f64> = VecDeque::with_capacity(opts.memory);

    if on_step(0, &x, fx) {
        return LbfgsOutcome { x, f: fx, iterations: 0, stop: Stop::Callback, history };
    }
    let mut iterations = 0;
    let stop = loop {
        if g.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= opts.grad_tol {
            break Stop::GradientSmall;
        }
        if iterations >= opts.max_iterations {
            break Stop::MaxIterations;
        }
        // two-loop recursion
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            alphas[i] = rho_hist[i] * dotv(&s_hist[i], &q);
            q.iter_mut().zip(&y_hist[i]).for_each(|(qj, yj)| *qj -= alphas[i] * yj);
        }
        let gamma = if k > 0 { dotv(&s_hist[k - 1], &y_hist[k - 1]) / dotv(&y_hist[k - 1], &y_hist[k - 1]) } else { 1.0 };
        q.iter_mut().for_each(|v| *v *= gamma);
        for i in 0..k {
            let beta = rho_hist[i] * dotv(&y_hist[i], &q);
            q.iter_mut().zip(&s_hist[i]).for_each(|(qj, sj)| *qj += (alphas[i] - beta) * sj);
        }
        let mut d = q;
        let mut slope = dotv(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dotv(&g, &d);
        }
        let a_init = if k == 0 { (1.0 / dotv(&d, &d).sqrt()).min(1.0) } else { 1.0 };
        let trial = {
            let mut ls = LineSearch { f: &mut f, x: &x, d: &d, f0: fx, g0: slope, c1: opts.c1, c2: opts.c2 };
            ls.run(a_init)
        };
        let Some(trial) = trial else {
            if k > 0 {
                // retry once from steepest descent before giving up
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                continue;
            }
            break Stop::LineSearchFailed;
        };
        assert!(trial.f <= fx, "line search accepted an increase: {} > {}", trial.f, fx);
        let x_new = axpy(&x, trial.a, &d);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dotv(&s, &y);
        if sy > 1e-300 {
            if s_hist.len() == opts.memory {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
        }
        x = x_new;
        fx = trial.f;
        g = trial.g;
        iterations += 1;
        history.push(fx);
        if on_step(iterations, &x, fx) {
            break Stop::Callback;
        }
    };
    LbfgsOutcome { x, f: fx, iterations, stop, history }
}
