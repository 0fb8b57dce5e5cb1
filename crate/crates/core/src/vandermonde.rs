//! ℓp regression on Vandermonde matrices.
//!
//! For a Vandermonde row `a = [1, t, ..., t^(d-1)]` the power
//! `<a, x>^(2^r)` is the evaluation at `t` of a polynomial of degree
//! `2^r (d-1)`, so it is linear in the coefficient vector of that polynomial.
//! Sampling by `ℓ_{p/2^r}` Lewis weights of the wider Vandermonde matrix
//! therefore preserves `‖Ax - b‖_p` on a sample whose size scales with
//! `2^r d` rather than `d^(p/2)`.

use crate::error::{Error, Result};
use crate::lewis::DEFAULT_ITERATIONS;
use crate::linalg::{dot, materialize, norm2, DenseMatrix, VandermondeSpec};
use crate::pipeline::{self, default_samples, FinalTarget, Linearization, PipelineOutput, SkeletonConfig};
use crate::solver::linf_exponent;

/// Powers and widths used to linearize `<a, x>^(2^r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionPlan {
    /// Largest `r` with `2^r <= p`.
    pub r: u32,
    /// `p / 2^r`, in `[1, 2)`.
    pub q: f64,
    /// Columns of the extended matrix, `2^r (d-1) + 1`.
    pub d_prime: usize,
    /// Columns sampled from within a group.
    pub d_dprime: usize,
}

/// Largest `r` with `2^r <= p`, for `p >= 1`.
pub(crate) fn floor_log2(p: f64) -> u32 {
    let mut r = 0u32;
    while r < 1023 && 2f64.powi(r as i32 + 1) <= p {
        r += 1;
    }
    r
}

pub fn plan_extension(d: usize, p: f64) -> Result<ExtensionPlan> {
    plan_extension_with(d, p, false)
}

/// As [`plan_extension`]; `wide_groups` sizes groups by the full
/// `2^(2r) (d-1) + 1` grid of node and target powers.
pub fn plan_extension_with(d: usize, p: f64, wide_groups: bool) -> Result<ExtensionPlan> {
    if d == 0 {
        return Err(Error::param("degree must be at least 1"));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param(format!("p must be finite and >= 1, got {p}")));
    }
    let r = floor_log2(p);
    let pow = 1usize
        .checked_shl(r)
        .filter(|v| *v < usize::MAX / d.max(1) / 2)
        .ok_or_else(|| Error::UnsupportedSize(format!("p = {p} is too large to extend")))?;
    let d_prime = pow * (d - 1) + 1;
    let d_dprime = if wide_groups {
        pow.checked_mul(pow)
            .and_then(|s| s.checked_mul(d - 1))
            .map(|v| v + 1)
            .ok_or_else(|| Error::UnsupportedSize(format!("p = {p} is too large to extend")))?
    } else {
        d_prime
    };
    Ok(ExtensionPlan {
        r,
        q: p / pow as f64,
        d_prime,
        d_dprime,
    })
}

/// Orthonormal basis of the polynomials of degree `< cols` sampled at
/// `nodes`, built by Arnoldi iteration. It spans the same columns as the
/// Vandermonde matrix without the monomial basis' exponential ill
/// conditioning; columns that fall into the span of earlier ones (fewer
/// distinct nodes than `cols`) are dropped.
pub fn orthonormal_vandermonde(nodes: &[f64], cols: usize) -> Result<DenseMatrix> {
    let n = nodes.len();
    if n == 0 || cols == 0 {
        return Ok(DenseMatrix::zeros(n, cols.min(1)));
    }
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    while basis.len() < cols.min(n) {
        let last = &basis[basis.len() - 1];
        let mut v: Vec<f64> = nodes.iter().zip(last).map(|(t, q)| t * q).collect();
        let start = norm2(&v);
        // two passes of Gram-Schmidt keep the basis orthogonal to rounding
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let len = norm2(&v);
        if !(len > 1e-10 * start) {
            break;
        }
        v.iter_mut().for_each(|a| *a /= len);
        basis.push(v);
    }
    let k = basis.len();
    let mut data = vec![0.0; n * k];
    for (j, q) in basis.iter().enumerate() {
        for (i, v) in q.iter().enumerate() {
            data[i * k + j] = *v;
        }
    }
    DenseMatrix::new(n, k, data)
}

pub fn extend_vandermonde(spec: &VandermondeSpec, plan: &ExtensionPlan) -> Result<VandermondeSpec> {
    spec.with_degree(plan.d_prime)
}

/// Coefficients of `(sum_j x_j z^j)^(2^r)`, by `r` rounds of self-convolution.
pub fn poly_power_coeffs(x: &[f64], r: u32) -> Vec<f64> {
    let mut c = x.to_vec();
    for _ in 0..r {
        if c.is_empty() {
            break;
        }
        let mut next = vec![0.0; 2 * c.len() - 1];
        for (i, u) in c.iter().enumerate() {
            for (j, v) in c.iter().enumerate() {
                next[i + j] += u * v;
            }
        }
        c = next;
    }
    c
}

/// Knobs for [`solve_vandermonde_lp`]. `None` sample sizes take the
/// `10 d' ln d'` and `10 d'' ln d'' / eps^2` defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct VanderConfig {
    pub p: f64,
    pub eps: f64,
    pub m1: Option<usize>,
    pub m2_per_group: Option<usize>,
    pub rounding: bool,
    pub wide_groups: bool,
    pub lewis_iterations: usize,
    /// Tolerance of the final solve; defaults to `eps`, at most `0.5`.
    pub solve_tol: Option<f64>,
    pub target: FinalTarget,
}

impl VanderConfig {
    pub fn new(p: f64, eps: f64) -> Self {
        Self {
            p,
            eps,
            m1: None,
            m2_per_group: None,
            rounding: true,
            wide_groups: false,
            lewis_iterations: DEFAULT_ITERATIONS,
            solve_tol: None,
            target: FinalTarget::Residual,
        }
    }
}

struct VanderLin<'a> {
    spec: &'a VandermondeSpec,
    plan: ExtensionPlan,
}

impl Linearization for VanderLin<'_> {
    fn full(&self) -> Result<DenseMatrix> {
        orthonormal_vandermonde(self.spec.nodes(), self.plan.d_prime)
    }

    fn group(&self, rows: &[usize], _t: f64) -> Result<DenseMatrix> {
        // a constant target only rescales the columns of the node-power
        // grid, which leaves Lewis weights unchanged
        let nodes: Vec<f64> = rows.iter().map(|&i| self.spec.nodes()[i]).collect();
        orthonormal_vandermonde(&nodes, self.plan.d_dprime)
    }
}

pub(crate) fn final_tol(explicit: Option<f64>, eps: f64) -> f64 {
    explicit.unwrap_or(eps).min(0.5)
}

pub fn solve_vandermonde_lp(
    spec: &VandermondeSpec,
    b: &[f64],
    cfg: &VanderConfig,
    seed: u64,
) -> Result<PipelineOutput> {
    let plan = plan_extension_with(spec.degree(), cfg.p, cfg.wide_groups)?;
    let a = materialize(spec);
    let skel = SkeletonConfig {
        p: cfg.p,
        q: plan.q,
        eps: cfg.eps,
        m1: cfg.m1.unwrap_or_else(|| default_samples(plan.d_prime as f64, 1.0)),
        m2_per_group: Some(
            cfg.m2_per_group
                .unwrap_or_else(|| default_samples(plan.d_dprime as f64, cfg.eps * cfg.eps)),
        ),
        rounding: cfg.rounding,
        lewis_iterations: cfg.lewis_iterations,
        solve_tol: final_tol(cfg.solve_tol, cfg.eps),
        target: cfg.target,
    };
    let lin = VanderLin { spec, plan };
    pipeline::run(&a, b, &lin, &skel, None, seed)
}

/// Result of [`solve_vandermonde_linf`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinfPipelineOutput {
    pub x: Vec<f64>,
    /// `‖Ax - b‖_∞` of the returned `x`.
    pub value: f64,
    /// Surrogate exponent actually used.
    pub p: f64,
    /// The exponent hit its cap.
    pub capped: bool,
    pub inner: PipelineOutput,
}

/// ℓ∞ regression through ℓp with `p = ceil(3 ln n / eps)`, capped at 128.
/// Only `eps`, the sample sizes, `rounding`, `wide_groups` and
/// `lewis_iterations` of `cfg` are read.
pub fn solve_vandermonde_linf(
    spec: &VandermondeSpec,
    b: &[f64],
    cfg: &VanderConfig,
    seed: u64,
) -> Result<LinfPipelineOutput> {
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {}", cfg.eps)));
    }
    let (p, capped) = linf_exponent(spec.nodes().len(), cfg.eps);
    let inner_cfg = VanderConfig {
        p,
        solve_tol: Some(cfg.solve_tol.unwrap_or((cfg.eps / 4.0).min(0.01))),
        ..cfg.clone()
    };
    let inner = solve_vandermonde_lp(spec, b, &inner_cfg, seed)?;
    let a = materialize(spec);
    let value = crate::linalg::residual(&a, &inner.x, b)
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(LinfPipelineOutput {
        x: inner.x.clone(),
        value,
        p,
        capped,
        inner,
    })
}
