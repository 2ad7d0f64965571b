//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The search direction comes from the usual two-loop recursion over the last
//! `history_size` curvature pairs, with the initial Hessian scaled by
//! `sᵀy / yᵀy`. Steps are chosen by bracketing followed by cubic-interpolation
//! zoom until both Wolfe conditions hold:
//!
//! ```text
//! f(x + αd) ≤ f(x) + c1·α·∇f(x)ᵀd
//! |∇f(x + αd)ᵀd| ≤ c2·|∇f(x)ᵀd|
//! ```
//!
//! Every accepted step satisfies the sufficient-decrease condition, so the
//! objective never increases between iterations.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    /// Stop when `‖∇f‖∞` drops to this.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease of an iteration is below
    /// this. Zero disables the test.
    pub ftol: f64,
    pub history_size: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_linesearch: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iter: 500,
            grad_tol: 1e-6,
            ftol: 2.220446049250313e-9,
            history_size: 10,
            c1: 1e-4,
            c2: 0.9,
            max_linesearch: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub initial_f: f64,
    pub n_iters: usize,
    pub n_evals: usize,
    pub termination: Termination,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

impl LbfgsResult {
    pub fn converged(&self) -> bool {
        matches!(
            self.termination,
            Termination::GradientTolerance | Termination::FunctionTolerance
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Evaluator<'a, F> {
    f: &'a mut F,
    evals: usize,
    iters: usize,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Evaluator<'_, F> {
    fn eval(&mut self, x: &[f64], g: &mut [f64]) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x, g);
        if !v.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { iters: self.iters });
        }
        Ok(v)
    }
}

/// A trial point of the line search.
#[derive(Clone)]
struct Trial {
    alpha: f64,
    f: f64,
    slope: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

/// Minimizer of the cubic interpolating `(a, fa, da)` and `(b, fb, db)`.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = db - da + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = b - (b - a) * (db + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

struct LineSearch<'o> {
    opts: &'o LbfgsOptions,
    f0: f64,
    slope0: f64,
}

impl LineSearch<'_> {
    fn armijo(&self, t: &Trial) -> bool {
        t.f <= self.f0 + self.opts.c1 * t.alpha * self.slope0
    }

    fn curvature(&self, t: &Trial) -> bool {
        t.slope.abs() <= -self.opts.c2 * self.slope0
    }

    fn probe<F: FnMut(&[f64], &mut [f64]) -> f64>(
        ev: &mut Evaluator<'_, F>,
        x0: &[f64],
        d: &[f64],
        alpha: f64,
    ) -> Result<Trial> {
        let x: Vec<f64> = x0.iter().zip(d).map(|(x, d)| x + alpha * d).collect();
        let mut g = vec![0.0; x.len()];
        let f = ev.eval(&x, &mut g)?;
        let slope = dot(&g, d);
        Ok(Trial {
            alpha,
            f,
            slope,
            x,
            g,
        })
    }

    /// Returns an accepted trial, or `None` if no step with sufficient
    /// decrease was found.
    fn search<F: FnMut(&[f64], &mut [f64]) -> f64>(
        &self,
        ev: &mut Evaluator<'_, F>,
        x0: &[f64],
        g0: &[f64],
        d: &[f64],
        alpha_init: f64,
    ) -> Result<Option<Trial>> {
        let origin = Trial {
            alpha: 0.0,
            f: self.f0,
            slope: self.slope0,
            x: x0.to_vec(),
            g: g0.to_vec(),
        };
        let mut prev = origin;
        let mut alpha = alpha_init;
        for i in 0..self.opts.max_linesearch {
            let cur = Self::probe(ev, x0, d, alpha)?;
            if !self.armijo(&cur) || (i > 0 && cur.f >= prev.f) {
                return self.zoom(ev, x0, d, prev, cur);
            }
            if self.curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope >= 0.0 {
                return self.zoom(ev, x0, d, cur, prev);
            }
            alpha = cur.alpha * 2.0;
            prev = cur;
        }
        // never bracketed; take the last point that made progress
        Ok((prev.alpha > 0.0).then_some(prev))
    }

    fn zoom<F: FnMut(&[f64], &mut [f64]) -> f64>(
        &self,
        ev: &mut Evaluator<'_, F>,
        x0: &[f64],
        d: &[f64],
        mut lo: Trial,
        mut hi: Trial,
    ) -> Result<Option<Trial>> {
        for _ in 0..self.opts.max_linesearch {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= f64::EPSILON * b.max(1e-300) {
                break;
            }
            let guard = 0.1 * width;
            let alpha = match cubic_min(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope) {
                Some(t) if t > a + guard && t < b - guard => t,
                _ => 0.5 * (a + b),
            };
            let cur = Self::probe(ev, x0, d, alpha)?;
            if !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Ok(Some(cur));
                }
                if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        Ok((lo.alpha > 0.0).then_some(lo))
    }
}

/// Minimizes `f` from `x0`. The closure writes the gradient into its second
/// argument and returns the objective.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut ev = Evaluator {
        f: &mut f,
        evals: 0,
        iters: 0,
    };
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = ev.eval(&x, &mut g)?;
    let initial_f = fx;
    let mut trace = vec![fx];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut alpha_buf = vec![0.0; opts.history_size.max(1)];

    let mut termination = Termination::MaxIterations;
    let mut iters = 0;
    if inf_norm(&g) <= opts.grad_tol {
        termination = Termination::GradientTolerance;
    } else {
        while iters < opts.max_iter {
            ev.iters = iters;
            // two-loop recursion: d = -H g
            let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
            for (i, (s, y, rho)) in history.iter().enumerate().rev() {
                let a = rho * dot(s, &d);
                alpha_buf[i] = a;
                d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            }
            if let Some((s, y, _)) = history.back() {
                let gamma = dot(s, y) / dot(y, y);
                d.iter_mut().for_each(|v| *v *= gamma);
            }
            for (i, (s, y, rho)) in history.iter().enumerate() {
                let b = rho * dot(y, &d);
                let a = alpha_buf[i];
                d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
            }
            let mut slope = dot(&g, &d);
            if slope >= 0.0 || !slope.is_finite() {
                history.clear();
                d = g.iter().map(|v| -v).collect();
                slope = dot(&g, &d);
            }
            let alpha_init = if history.is_empty() {
                (1.0 / dot(&g, &g).sqrt()).min(1.0)
            } else {
                1.0
            };

            let ls = LineSearch {
                opts,
                f0: fx,
                slope0: slope,
            };
            let Some(step) = ls.search(&mut ev, &x, &g, &d, alpha_init)? else {
                termination = Termination::LineSearchFailed;
                break;
            };
            iters += 1;

            let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > f64::EPSILON * dot(&y, &y) {
                if history.len() == opts.history_size.max(1) {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }

            let f_prev = fx;
            x = step.x;
            g = step.g;
            fx = step.f;
            trace.push(fx);

            if inf_norm(&g) <= opts.grad_tol {
                termination = Termination::GradientTolerance;
                break;
            }
            if opts.ftol > 0.0
                && (f_prev - fx) <= opts.ftol * f_prev.abs().max(fx.abs()).max(1.0)
            {
                termination = Termination::FunctionTolerance;
                break;
            }
        }
    }

    Ok(LbfgsResult {
        x,
        f: fx,
        initial_f,
        n_iters: iters,
        n_evals: ev.evals,
        termination,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let mut f = 0.0;
        g.fill(0.0);
        for i in 0..x.len() - 1 {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            f += 100.0 * a * a + b * b;
            g[i] += -400.0 * x[i] * a - 2.0 * b;
            g[i + 1] += 200.0 * a;
        }
        f
    }

    #[test]
    fn solves_rosenbrock() {
        let opts = LbfgsOptions {
            ftol: 0.0,
            grad_tol: 1e-8,
            max_iter: 1000,
            ..Default::default()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0, -1.2, 1.0], &opts).unwrap();
        assert_eq!(r.termination, Termination::GradientTolerance);
        for v in &r.x {
            assert!((v - 1.0).abs() < 1e-6, "{:?}", r.x);
        }
    }

    #[test]
    fn quadratic_converges_fast() {
        let diag = [1.0, 10.0, 100.0];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..3 {
                g[i] = diag[i] * (x[i] - 1.0);
                v += 0.5 * diag[i] * (x[i] - 1.0).powi(2);
            }
            v
        };
        let r = minimize(f, &[0.0; 3], &LbfgsOptions::default()).unwrap();
        assert!(r.converged());
        assert!(r.n_iters < 20);
    }

    #[test]
    fn objective_never_increases() {
        let r = minimize(
            rosenbrock,
            &[-1.5, 2.0, 0.5],
            &LbfgsOptions {
                ftol: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.f <= r.initial_f);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -1.0;
            if x[0] > 0.5 {
                f64::NAN
            } else {
                -x[0]
            }
        };
        assert!(matches!(
            minimize(f, &[0.0], &LbfgsOptions::default()),
            Err(Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn stationary_start() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        };
        let r = minimize(f, &[0.0], &LbfgsOptions::default()).unwrap();
        assert_eq!(r.n_iters, 0);
        assert_eq!(r.termination, Termination::GradientTolerance);
    }

    #[test]
    fn cubic_interpolation_exact_for_cubic() {
        // phi(t) = (t - 1)^3 + 3 (t - 1)^2 ... minimum of t^3 - 3t at t = 1
        let phi = |t: f64| t * t * t - 3.0 * t;
        let dphi = |t: f64| 3.0 * t * t - 3.0;
        let t = cubic_min(0.0, phi(0.0), dphi(0.0), 2.0, phi(2.0), dphi(2.0)).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }
}
