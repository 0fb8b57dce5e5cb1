//! `l_q` Lewis weights for `1 <= q < 4` and Lewis weight sampling.
//!
//! The Lewis weights of `A` are the fixed point of
//!
//! ```text
//! w_i = tau_i(w)^(q/2),   tau_i(w) = a_i^T (A^T W^(1-2/q) A)^-1 a_i
//! ```
//!
//! For `q < 4` the map `w -> tau(w)^(q/2)` contracts in log space with
//! factor `|1 - q/2|`, so plain iteration from `w = 1` converges.
//!
//! `tau` is evaluated through an orthogonal factorization of
//! `W^(1/2 - 1/q) A` (the leverage scores of the reweighted matrix divided
//! by the row weight), which is the same quantity as the Gram-matrix formula
//! but does not square the condition number. Extended Vandermonde matrices
//! are badly conditioned enough for that to matter.

use rand::distr::{Distribution, Uniform};
use rand::distr::weighted::WeightedIndex;

use crate::error::{Error, Result};
use crate::linalg::{leverage_scores, DenseMatrix, SampleSet};
use crate::seed::rng_from_seed;

/// Weight assigned to an all-zero row.
pub const ZERO_ROW_FLOOR: f64 = 1e-300;

/// Default number of fixed-point iterations.
pub const DEFAULT_ITERATIONS: usize = 30;

/// Per-row Lewis weights together with the exponent and iteration count
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LewisWeights {
    weights: Vec<f64>,
    q: f64,
    iterations: usize,
    floored: Vec<usize>,
}

impl LewisWeights {
    /// All-ones starting point.
    pub fn ones(n: usize, q: f64) -> Self {
        Self {
            weights: vec![1.0; n],
            q,
            iterations: 0,
            floored: Vec::new(),
        }
    }

    /// Wraps externally supplied weights.
    pub fn from_weights(weights: Vec<f64>, q: f64) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::input("Lewis weights must be finite and positive"));
        }
        Ok(Self {
            weights,
            q,
            iterations: 0,
            floored: Vec::new(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Rows that were all zero and received [`ZERO_ROW_FLOOR`].
    pub fn floored(&self) -> &[usize] {
        &self.floored
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(1.0..4.0).contains(&q) {
        return Err(Error::param(format!(
            "Lewis iteration needs 1 <= q < 4, got {q}"
        )));
    }
    Ok(())
}

/// `tau_i = a_i^T (A^T W^(1-2/q) A)^-1 a_i` for the current weights.
///
/// Rank-deficient inputs use the pseudo-inverse on the numerical column
/// space, in which case `sum_i w_i^(1-2/q) tau_i` equals the numerical rank
/// instead of `d`.
pub fn compute_tau(a: &DenseMatrix, w: &LewisWeights) -> Result<Vec<f64>> {
    let n = a.nrows();
    if w.weights.len() != n {
        return Err(Error::input(format!(
            "{} weights for a matrix with {n} rows",
            w.weights.len()
        )));
    }
    if w.weights.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::input("Lewis weights must be positive"));
    }
    let expo = 0.5 - 1.0 / w.q;
    let row_scale: Vec<f64> = w.weights.iter().map(|wi| wi.powf(expo)).collect();
    let scaled = a.scale_rows(&row_scale);
    let (lev, _) = leverage_scores(&scaled)?;
    Ok(lev
        .iter()
        .zip(&row_scale)
        .map(|(l, s)| l / (s * s))
        .collect())
}

/// One application of `w_i <- tau_i^(q/2)`.
pub fn lewis_iterate(a: &DenseMatrix, q: f64, w: &LewisWeights) -> Result<LewisWeights> {
    check_q(q)?;
    let mut current = w.clone();
    current.q = q;
    let tau = compute_tau(a, &current)?;
    let mut floored = Vec::new();
    let weights = tau
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let v = t.max(0.0).powf(q / 2.0);
            if v > 0.0 && v.is_finite() {
                v
            } else {
                floored.push(i);
                ZERO_ROW_FLOOR
            }
        })
        .collect();
    Ok(LewisWeights {
        weights,
        q,
        iterations: w.iterations + 1,
        floored,
    })
}

/// Runs `iterations` Lewis iterations starting from all ones.
pub fn approx_lewis_weights(a: &DenseMatrix, q: f64, iterations: usize) -> Result<LewisWeights> {
    check_q(q)?;
    if iterations == 0 {
        return Err(Error::param("at least one Lewis iteration is required"));
    }
    let mut w = LewisWeights::ones(a.nrows(), q);
    for _ in 0..iterations {
        w = lewis_iterate(a, q, &w)?;
    }
    Ok(w)
}

/// `max_i |tau_i^(q/2) / w_i - 1|` over rows that were not floored.
pub fn fixed_point_residual(a: &DenseMatrix, w: &LewisWeights) -> Result<f64> {
    let tau = compute_tau(a, w)?;
    Ok(tau
        .iter()
        .zip(&w.weights)
        .enumerate()
        .filter(|(i, _)| !w.floored.contains(i))
        .map(|(_, (t, wi))| (t.powf(w.q / 2.0) / wi - 1.0).abs())
        .fold(0.0, f64::max))
}

/// The per-row sampling probability `w_i / sum_j w_j` and the rescaling
/// factor `(1 / (m q_i))^(1/p)` a draw of row `i` receives.
pub fn sampling_distribution(weights: &[f64], m: usize, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::param(format!("sampling exponent must be finite and >= 1, got {p}")));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::input("sampling weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::input("sampling weights are all zero"));
    }
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let scales = probs
        .iter()
        .map(|&q| if q > 0.0 { (1.0 / (m as f64 * q)).powf(1.0 / p) } else { f64::INFINITY })
        .collect();
    Ok((probs, scales))
}

/// Draws `m` rows i.i.d. with probability `w_i / sum_j w_j` and scale
/// `(1 / (m q_i))^(1/p)`, so that `E ||S A x||_p^p = ||A x||_p^p`.
pub fn build_sampler(weights: &[f64], m: usize, p: f64, seed: u64) -> Result<SampleSet> {
    let (probs, row_scales) = sampling_distribution(weights, m, p)?;
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::input(format!("bad sampling weights: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let indices: Vec<usize> = (0..m).map(|_| dist.sample(&mut rng)).collect();
    let scales = indices.iter().map(|&i| row_scales[i]).collect();
    SampleSet::new(indices, scales)
}

/// Uniform row sampling with scale `(n/m)^(1/p)`; the baseline the Lewis
/// sampler is compared against.
pub fn uniform_sampler(n: usize, m: usize, p: f64, seed: u64) -> Result<SampleSet> {
    if n == 0 || m == 0 {
        return Err(Error::param("uniform sampling needs n >= 1 and m >= 1"));
    }
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::param(format!("sampling exponent must be finite and >= 1, got {p}")));
    }
    let dist = Uniform::new(0, n).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let scale = (n as f64 / m as f64).powf(1.0 / p);
    let indices = (0..m).map(|_| dist.sample(&mut rng)).collect();
    SampleSet::new(indices, vec![scale; m])
}
