//! The two-stage sample, round, group and solve skeleton shared by the
//! Vandermonde, low-rank + sparse and general pipelines.
//!
//! A [`Linearization`] supplies, for the whole matrix and for each group of
//! rows with a common rounded target `t`, an extended matrix whose rows
//! linearize `<a_i, x>^(2^r)` (respectively `(<a_i, x> - t)^(2^r)`). The
//! skeleton only ever samples from those extended matrices and solves on
//! the original rows.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lewis::{approx_lewis_weights, build_sampler};
use crate::linalg::{apply_sample, residual, DenseMatrix, SampleSet};
use crate::round_trunc::{partition_groups, round_trunc};
use crate::seed::derive_seed;
use crate::solver::solve_lp;

/// Tolerance of the constant-factor first-stage solve.
pub const STAGE1_TOL: f64 = 0.5;

pub trait Linearization: Sync {
    /// Extended matrix over all rows.
    fn full(&self) -> Result<DenseMatrix>;

    /// Extended matrix over `rows`, whose rounded target is the constant `t`.
    fn group(&self, rows: &[usize], t: f64) -> Result<DenseMatrix>;

    /// Default second-stage sample count for a group with an extended
    /// matrix of `width` columns.
    fn default_group_samples(&self, width: usize, eps: f64) -> usize {
        default_samples(width as f64, eps * eps)
    }
}

/// `ceil(10 w ln w / denom)`, never below `w`.
pub fn default_samples(width: f64, denom: f64) -> usize {
    let w = width.max(1.0);
    let m = (10.0 * w * w.max(2.0).ln() / denom).ceil();
    if m.is_finite() && m < usize::MAX as f64 {
        (m as usize).max(w as usize)
    } else {
        usize::MAX
    }
}

/// Which vector the final subsampled solve fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalTarget {
    /// The unrounded residual `b - A x~`.
    #[default]
    Residual,
    /// The rounded, truncated residual used for grouping.
    Rounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonConfig {
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    pub m1: usize,
    pub m2_per_group: Option<usize>,
    pub rounding: bool,
    pub lewis_iterations: usize,
    pub solve_tol: f64,
    pub target: FinalTarget,
}

/// Result of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub x: Vec<f64>,
    /// Constant-factor first-stage solution; `None` when rounding is off.
    pub x_tilde: Option<Vec<f64>>,
    pub stage1: SampleSet,
    pub stage2: Option<SampleSet>,
    pub groups: usize,
    /// Both subsampled solves reported convergence.
    pub converged: bool,
}

impl PipelineOutput {
    /// Rows used by the final solve.
    pub fn final_samples(&self) -> usize {
        self.stage2.as_ref().unwrap_or(&self.stage1).len()
    }
}

/// Lewis weight sampling of `m` rows of `ext`; the identity when `m >= n`.
pub fn lewis_sample(
    ext: &DenseMatrix,
    q: f64,
    iterations: usize,
    m: usize,
    p: f64,
    seed: u64,
) -> Result<SampleSet> {
    let n = ext.nrows();
    if m >= n {
        return Ok(SampleSet::identity(n));
    }
    let w = approx_lewis_weights(ext, q, iterations)?;
    build_sampler(w.weights(), m, p, seed)
}

pub(crate) fn run<L: Linearization>(
    a: &DenseMatrix,
    b: &[f64],
    lin: &L,
    cfg: &SkeletonConfig,
    stage1_weights: Option<&[f64]>,
    seed: u64,
) -> Result<PipelineOutput> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::input(format!(
            "matrix has {n} rows but right-hand side has {}",
            b.len()
        )));
    }
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {}", cfg.eps)));
    }
    if !(cfg.p.is_finite() && cfg.p >= 1.0) {
        return Err(Error::param(format!("p must be finite and >= 1, got {}", cfg.p)));
    }
    if n == 0 {
        return Err(Error::input("empty regression problem"));
    }

    let m1 = cfg.m1.max(1);
    let stage1 = match stage1_weights {
        _ if m1 >= n => SampleSet::identity(n),
        Some(w) if w.len() == n => build_sampler(w, m1, cfg.p, derive_seed(seed, &[1]))?,
        Some(w) => {
            return Err(Error::input(format!(
                "{} precomputed weights for {n} rows",
                w.len()
            )))
        }
        None => {
            let ext = lin.full()?;
            lewis_sample(&ext, cfg.q, cfg.lewis_iterations, m1, cfg.p, derive_seed(seed, &[1]))?
        }
    };
    let (a1, b1) = apply_sample(&stage1, a, b)?;

    if !cfg.rounding {
        let sol = solve_lp(&a1, &b1, cfg.p, cfg.solve_tol)?;
        return Ok(PipelineOutput {
            x: sol.x,
            x_tilde: None,
            stage1,
            stage2: None,
            groups: 0,
            converged: sol.converged,
        });
    }

    let first = solve_lp(&a1, &b1, cfg.p, STAGE1_TOL)?;
    let x_tilde = first.x;
    let shifted: Vec<f64> = residual(a, &x_tilde, b).iter().map(|r| -r).collect();
    let rounded = round_trunc(&shifted, cfg.eps)?;
    let partition = partition_groups(&rounded);

    let parts: Vec<SampleSet> = partition
        .iter()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, (t, rows))| -> Result<SampleSet> {
            let local = if let Some(m2) = cfg.m2_per_group {
                if m2 >= rows.len() {
                    SampleSet::identity(rows.len())
                } else {
                    let ext = lin.group(rows, t)?;
                    lewis_sample(
                        &ext,
                        cfg.q,
                        cfg.lewis_iterations,
                        m2.max(1),
                        cfg.p,
                        derive_seed(seed, &[2, k as u64]),
                    )?
                }
            } else {
                let ext = lin.group(rows, t)?;
                let m2 = lin.default_group_samples(ext.ncols(), cfg.eps);
                lewis_sample(
                    &ext,
                    cfg.q,
                    cfg.lewis_iterations,
                    m2,
                    cfg.p,
                    derive_seed(seed, &[2, k as u64]),
                )?
            };
            Ok(local.remap(rows))
        })
        .collect::<Result<_>>()?;
    let stage2 = SampleSet::concat(&parts);

    let target = match cfg.target {
        FinalTarget::Residual => &shifted,
        FinalTarget::Rounded => &rounded,
    };
    let (a2, b2) = apply_sample(&stage2, a, target)?;
    let sol = solve_lp(&a2, &b2, cfg.p, cfg.solve_tol)?;
    let x = sol.x.iter().zip(&x_tilde).map(|(u, v)| u + v).collect();
    Ok(PipelineOutput {
        x,
        x_tilde: Some(x_tilde),
        stage1,
        stage2: Some(stage2),
        groups: partition.len(),
        converged: first.converged && sol.converged,
    })
}
