//! Dense `l_p` regression solvers for the small subsampled problems.
//!
//! [`solve_lp`] minimizes the smoothed objective `sum_i (r_i^2 + delta)^(p/2)`
//! with `r = A x - b`, annealing `delta` towards zero. Each step solves one
//! weighted least-squares problem:
//!
//! * `p <= 2`: the classical IRLS majorizer, weights `(r_i^2 + delta)^(p/2 - 1)`;
//! * `p > 2`: the Newton system of the smoothed objective, weights
//!   `(r_i^2 + delta)^(p/2 - 2) ((p - 1) r_i^2 + delta)`.
//!
//! Steps are damped by halving until the smoothed objective does not
//! increase. All objective and weight arithmetic happens in log space, so
//! exponents in the hundreds are fine.

use crate::error::{Error, Result};
use crate::linalg::{lp_norm, lstsq, residual, DenseMatrix};

/// Hard cap on the exponent used to approximate `l_inf`.
pub const LINF_MAX_P: f64 = 128.0;

const MAX_ITERATIONS: usize = 500;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// `||A x - b||_p` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    /// `false` when the iteration cap was hit; `x` is then the best iterate
    /// seen, not a certified `(1 + tol)` solution.
    pub converged: bool,
    /// Log of the smoothed objective after every accepted step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinfSolution {
    pub x: Vec<f64>,
    /// `||A x - b||_inf`.
    pub value: f64,
    /// Exponent that was actually solved.
    pub p: f64,
    /// The exponent hit [`LINF_MAX_P`].
    pub capped: bool,
    pub converged: bool,
}

fn check_shape(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if a.nrows() != b.len() {
        return Err(Error::input(format!(
            "matrix has {} rows but right-hand side has {}",
            a.nrows(),
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("right-hand side has non-finite entries"));
    }
    Ok(())
}

/// Least squares through an orthogonal factorization.
pub fn solve_l2(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_shape(a, b)?;
    lstsq(a, b)
}

fn log_sum_exp(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln sum_i (r_i^2 + delta)^(p/2)`.
fn smoothed_log_objective(r: &[f64], p: f64, delta: f64) -> f64 {
    log_sum_exp(r.iter().map(|ri| 0.5 * p * (ri * ri + delta).ln()))
}

fn mean_square(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>() / v.len() as f64
}

/// One weighted least-squares direction at residual `r`.
fn step_direction(a: &DenseMatrix, r: &[f64], p: f64, delta: f64) -> Result<Vec<f64>> {
    let newton = p > 2.0;
    let (log_h, g): (Vec<f64>, Vec<f64>) = r
        .iter()
        .map(|&ri| {
            let s = ri * ri + delta;
            if newton {
                let c = (p - 1.0) * ri * ri + delta;
                ((0.5 * p - 2.0) * s.ln() + c.ln(), ri * s / c)
            } else {
                ((0.5 * p - 1.0) * s.ln(), ri)
            }
        })
        .unzip();
    let top = log_h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sqrt_h: Vec<f64> = log_h.iter().map(|l| (0.5 * (l - top)).exp()).collect();
    let weighted = a.scale_rows(&sqrt_h);
    let rhs: Vec<f64> = g.iter().zip(&sqrt_h).map(|(gi, s)| -gi * s).collect();
    lstsq(&weighted, &rhs)
}

/// Approximately minimizes `||A x - b||_p` to relative accuracy `tol`.
pub fn solve_lp(a: &DenseMatrix, b: &[f64], p: f64, tol: f64) -> Result<LpSolution> {
    check_shape(a, b)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param(format!("solve_lp needs a finite p >= 1, got {p}")));
    }
    if !(tol > 0.0 && tol <= 0.5) {
        return Err(Error::param(format!("tolerance must lie in (0, 1/2], got {tol}")));
    }
    let mut x = lstsq(a, b)?;
    let mut r = residual(a, &x, b);
    let finish = |x: Vec<f64>, r: &[f64], iterations, converged, history| -> Result<LpSolution> {
        Ok(LpSolution {
            objective: lp_norm(r, p)?,
            x,
            iterations,
            converged,
            history,
        })
    };
    let b_scale = mean_square(b);
    let floor = 1e-14 * b_scale.max(mean_square(&r));
    if p == 2.0 || mean_square(&r) == 0.0 || floor == 0.0 {
        return finish(x, &r, 0, true, Vec::new());
    }

    let mut delta = mean_square(&r).max(floor);
    let mut f = smoothed_log_objective(&r, p, delta);
    let mut history = vec![f];
    let mut best = (lp_norm(&r, p)?, x.clone());
    let mut small_steps = 0;
    let mut iterations = 0;
    let mut converged = false;
    let threshold = tol * tol / 8.0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let dir = step_direction(a, &r, p, delta)?;
        let ad = a.matvec(&dir);
        let mut eta = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let r_try: Vec<f64> = r.iter().zip(&ad).map(|(ri, di)| ri + eta * di).collect();
            let f_try = smoothed_log_objective(&r_try, p, delta);
            if f_try <= f {
                accepted = Some((r_try, f_try));
                break;
            }
            eta *= 0.5;
        }
        let rel_decrease = match accepted {
            Some((r_new, f_new)) => {
                for (xi, di) in x.iter_mut().zip(&dir) {
                    *xi += eta * di;
                }
                let dec = -(f_new - f).exp_m1();
                debug_assert!(f_new <= f);
                r = r_new;
                f = f_new;
                history.push(f);
                let obj = lp_norm(&r, p)?;
                if obj < best.0 {
                    best = (obj, x.clone());
                }
                dec
            }
            None => 0.0,
        };
        if rel_decrease < threshold {
            small_steps += 1;
        } else {
            small_steps = 0;
        }
        if small_steps >= 3 {
            let target = (tol * tol * mean_square(&r)).max(floor);
            if delta <= target * (1.0 + 1e-12) {
                converged = true;
                break;
            }
            delta = (delta / 10.0).max(target);
            f = smoothed_log_objective(&r, p, delta);
            history.push(f);
            small_steps = 0;
        }
    }
    let (_, xb) = best;
    let rb = residual(a, &xb, b);
    finish(xb, &rb, iterations, converged, history)
}

/// Exponent used to approximate `l_inf` on `n` rows: `ceil(3 ln n / eps)`,
/// at least 2 and capped at [`LINF_MAX_P`]. The flag reports the cap.
pub fn linf_exponent(n: usize, eps: f64) -> (f64, bool) {
    let raw = (3.0 * (n.max(1) as f64).ln() / eps).ceil().max(2.0);
    if raw > LINF_MAX_P {
        (LINF_MAX_P, true)
    } else {
        (raw, false)
    }
}

/// `min_x ||A x - b||_inf` through a large-`p` solve.
pub fn solve_linf(a: &DenseMatrix, b: &[f64], eps: f64) -> Result<LinfSolution> {
    check_shape(a, b)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (p, capped) = linf_exponent(a.nrows(), eps);
    let sol = solve_lp(a, b, p, (eps / 4.0).min(1e-2))?;
    let value = lp_norm(&residual(a, &sol.x, b), f64::INFINITY)?;
    Ok(LinfSolution {
        x: sol.x,
        value,
        p,
        capped,
        converged: sol.converged,
    })
}

fn raw_objective(a: &DenseMatrix, b: &[f64], p: f64, x: &[f64]) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let r: f64 = a.row(i).iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - b[i];
            r.abs().powf(p)
        })
        .sum()
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimizes a convex function of one variable starting near `t0`.
fn golden_min(mut phi: impl FnMut(f64) -> f64, t0: f64) -> (f64, f64) {
    let mut h = 0.1 * (1.0 + t0.abs());
    let f0 = phi(t0);
    let f1 = phi(t0 + h);
    let (mut lo, mut hi);
    if f1 <= f0 {
        let (mut a, mut bb, mut fb) = (t0, t0 + h, f1);
        let mut c = bb + 2.0 * h;
        let mut fc = phi(c);
        let mut guard = 0;
        while fc < fb && guard < 200 {
            a = bb;
            bb = c;
            fb = fc;
            h *= 2.0;
            c = bb + 2.0 * h;
            fc = phi(c);
            guard += 1;
        }
        lo = a;
        hi = c;
    } else {
        let (mut c, mut bb, mut fb) = (t0 + h, t0, f0);
        let mut a = bb - h;
        let mut fa = phi(a);
        let mut guard = 0;
        while fa < fb && guard < 200 {
            c = bb;
            bb = a;
            fb = fa;
            h *= 2.0;
            a = bb - h;
            fa = phi(a);
            guard += 1;
        }
        lo = a;
        hi = c;
    }
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    while (hi - lo) > 1e-10 * (1.0 + x1.abs().max(x2.abs())) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = phi(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn nested_min(
    a: &DenseMatrix,
    b: &[f64],
    p: f64,
    start: &[f64],
    x: &mut Vec<f64>,
    k: usize,
) -> f64 {
    if k == x.len() {
        return raw_objective(a, b, p, x);
    }
    let (t, _) = golden_min(
        |t| {
            x[k] = t;
            nested_min(a, b, p, start, x, k + 1)
        },
        start[k],
    );
    x[k] = t;
    nested_min(a, b, p, start, x, k + 1)
}

/// Brute-force global minimizer of `||A x - b||_p` for at most three
/// unknowns.
///
/// Minimizing a convex function over some coordinates leaves a convex
/// function of the rest, so golden-section search nested once per
/// coordinate finds the global optimum, including for nonsmooth `p = 1`.
/// Used as an independent check on [`solve_lp`].
pub fn oracle_solve(a: &DenseMatrix, b: &[f64], p: f64) -> Result<Vec<f64>> {
    check_shape(a, b)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param(format!("oracle needs a finite p >= 1, got {p}")));
    }
    let d = a.ncols();
    if d > 3 {
        return Err(Error::Unsupported(format!(
            "oracle handles at most 3 unknowns, got {d}"
        )));
    }
    let start = lstsq(a, b)?;
    let mut x = start.clone();
    nested_min(a, b, p, &start, &mut x, 0);
    Ok(x)
}
