//! Linearizations for low-rank plus sparse matrices and for arbitrary
//! matrices, feeding the same two-stage skeleton as the Vandermonde path.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lewis::{approx_lewis_weights, LewisWeights, DEFAULT_ITERATIONS};
use crate::linalg::DenseMatrix;
use crate::pipeline::{self, default_samples, FinalTarget, Linearization, PipelineOutput, SkeletonConfig};
use crate::vandermonde::{final_tol, floor_log2};

/// Largest extended width any builder will produce unless told otherwise.
pub const DEFAULT_WIDTH_CAP: usize = 4096;

/// `A = left * right + S` with `left` n×k, `right` k×d and at most `s`
/// nonzeros in each row of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankPlusSparse {
    left: DenseMatrix,
    right: DenseMatrix,
    sparse: Vec<Vec<(usize, f64)>>,
    s: usize,
}

impl LowRankPlusSparse {
    pub fn new(
        left: DenseMatrix,
        right: DenseMatrix,
        sparse: Vec<Vec<(usize, f64)>>,
        s: usize,
    ) -> Result<Self> {
        if left.ncols() != right.nrows() {
            return Err(Error::input(format!(
                "left factor has {} columns but right factor has {} rows",
                left.ncols(),
                right.nrows()
            )));
        }
        if sparse.len() != left.nrows() {
            return Err(Error::input(format!(
                "{} sparse rows for {} matrix rows",
                sparse.len(),
                left.nrows()
            )));
        }
        let d = right.ncols();
        for (i, row) in sparse.iter().enumerate() {
            if row.len() > s {
                return Err(Error::input(format!(
                    "sparse row {i} has {} entries, more than s = {s}",
                    row.len()
                )));
            }
            if let Some(&(c, v)) = row.iter().find(|(c, v)| *c >= d || !v.is_finite()) {
                return Err(Error::input(format!("bad sparse entry ({c}, {v}) in row {i}")));
            }
        }
        Ok(Self { left, right, sparse, s })
    }

    pub fn nrows(&self) -> usize {
        self.left.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.right.ncols()
    }

    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    pub fn sparsity(&self) -> usize {
        self.s
    }

    pub fn left(&self) -> &DenseMatrix {
        &self.left
    }

    pub fn right(&self) -> &DenseMatrix {
        &self.right
    }

    pub fn sparse_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.sparse
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let (n, d, k) = (self.nrows(), self.ncols(), self.rank());
        let mut out = DenseMatrix::zeros(n, d);
        for i in 0..n {
            let row = out.row_mut(i);
            for j in 0..k {
                let a = self.left.get(i, j);
                if a != 0.0 {
                    for (o, v) in row.iter_mut().zip(self.right.row(j)) {
                        *o += a * v;
                    }
                }
            }
            for &(c, v) in &self.sparse[i] {
                row[c] += v;
            }
        }
        out
    }

    fn select(&self, rows: &[usize]) -> Self {
        Self {
            left: self.left.select_rows(rows),
            right: self.right.clone(),
            sparse: rows.iter().map(|&i| self.sparse[i].clone()).collect(),
            s: self.s,
        }
    }

    /// Operand for `[A, -t]`: the constant joins the low-rank basis as a
    /// new direction `e_{d}`, paired with the coordinate `x_{d} = 1`.
    fn augment(&self, t: f64) -> Self {
        let (n, d, k) = (self.nrows(), self.ncols(), self.rank());
        let mut left = DenseMatrix::zeros(n, k + 1);
        for i in 0..n {
            let row = left.row_mut(i);
            row[..k].copy_from_slice(self.left.row(i));
            row[k] = -t;
        }
        let mut right = DenseMatrix::zeros(k + 1, d + 1);
        for j in 0..k {
            right.row_mut(j)[..d].copy_from_slice(self.right.row(j));
        }
        right.row_mut(k)[d] = 1.0;
        Self {
            left,
            right,
            sparse: self.sparse.clone(),
            s: self.s,
        }
    }
}

/// A monomial in the low-rank directions `<v_j, x>` and the coordinates `x_c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    /// Exponent of `<v_j, x>` for each low-rank direction.
    pub low_rank: Vec<u8>,
    /// `(c, e)` pairs: `x_c^e`, sorted by `c`, `e > 0`.
    pub coords: Vec<(usize, u8)>,
}

impl Monomial {
    fn eval(&self, proj: &[f64], x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (p, &e) in proj.iter().zip(&self.low_rank) {
            v *= p.powi(e as i32);
        }
        for &(c, e) in &self.coords {
            v *= x[c].powi(e as i32);
        }
        v
    }
}

/// Extended matrix for a low-rank plus sparse operand.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSparseExtension {
    matrix: DenseMatrix,
    monomials: Vec<Monomial>,
    right: DenseMatrix,
}

impl LowRankSparseExtension {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// `y(x)` with `<a_i, x>^(2^r) = <m_i, y(x)>`.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.right.ncols() {
            return Err(Error::input(format!(
                "expected {} coordinates, got {}",
                self.right.ncols(),
                x.len()
            )));
        }
        let proj = self.right.matvec(x);
        Ok(self.monomials.iter().map(|m| m.eval(&proj, x)).collect())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Every vector of `parts` nonnegative integers summing to `total`.
fn compositions(parts: usize, total: usize, out: &mut Vec<Vec<u8>>) {
    fn go(prefix: &mut Vec<u8>, parts: usize, left: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == parts {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in 0..=left {
            prefix.push(e as u8);
            go(prefix, parts, left - e, out);
            prefix.pop();
        }
    }
    if parts > 0 {
        go(&mut Vec::with_capacity(parts), parts, total, out);
    } else if total == 0 {
        out.push(Vec::new());
    }
}

fn check_lowrank_guard(k: usize, s: usize, d: usize, power: usize, cap: usize) -> Result<()> {
    if k + s > 6 {
        return Err(Error::UnsupportedSize(format!("rank + sparsity = {} exceeds 6", k + s)));
    }
    if power > 8 {
        return Err(Error::UnsupportedSize(format!("tensor power {power} exceeds 8")));
    }
    let bound = binomial(d, s) * ((k + s) as f64).powi(power as i32);
    if bound > cap as f64 {
        return Err(Error::UnsupportedSize(format!(
            "extended width bound {bound} exceeds the cap of {cap} columns"
        )));
    }
    Ok(())
}

/// Linearizes `<a_i, x>^(2^r)` for `a_i = sum_j alpha_ij v_j + sparse_i`,
/// one column per monomial of the expansion.
pub fn extend_lowrank_sparse(ops: &LowRankPlusSparse, r: u32) -> Result<LowRankSparseExtension> {
    extend_lowrank_sparse_capped(ops, r, DEFAULT_WIDTH_CAP)
}

pub fn extend_lowrank_sparse_capped(
    ops: &LowRankPlusSparse,
    r: u32,
    cap: usize,
) -> Result<LowRankSparseExtension> {
    let (k, s, d) = (ops.rank(), ops.sparsity(), ops.ncols());
    if r > 3 {
        return Err(Error::UnsupportedSize(format!("tensor power 2^{r} exceeds 8")));
    }
    let power = 1usize << r;
    check_lowrank_guard(k, s, d, power, cap)?;

    let n = ops.nrows();
    let mut rows: Vec<Vec<(Monomial, f64)>> = Vec::with_capacity(n);
    let mut parts = Vec::new();
    for i in 0..n {
        let mut coords: BTreeMap<usize, f64> = BTreeMap::new();
        for &(c, v) in &ops.sparse[i] {
            *coords.entry(c).or_insert(0.0) += v;
        }
        // (basis position, coefficient); positions < k are low-rank
        let elems: Vec<(usize, f64)> = (0..k)
            .map(|j| (j, ops.left.get(i, j)))
            .chain(coords.into_iter().map(|(c, v)| (k + c, v)))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        parts.clear();
        compositions(elems.len(), power, &mut parts);
        let mut terms = Vec::with_capacity(parts.len());
        for m in &parts {
            let mut coef = factorial(power);
            let mut key = Monomial {
                low_rank: vec![0; k],
                coords: Vec::new(),
            };
            for (&(pos, v), &e) in elems.iter().zip(m) {
                coef *= v.powi(e as i32) / factorial(e as usize);
                if e > 0 {
                    if pos < k {
                        key.low_rank[pos] = e;
                    } else {
                        key.coords.push((pos - k, e));
                    }
                }
            }
            terms.push((key, coef));
        }
        rows.push(terms);
    }

    let mut index: BTreeMap<Monomial, usize> = BTreeMap::new();
    for (key, _) in rows.iter().flatten() {
        index.entry(key.clone()).or_insert(0);
    }
    for (j, v) in index.values_mut().enumerate() {
        *v = j;
    }
    let width = index.len();
    if width > cap {
        return Err(Error::UnsupportedSize(format!(
            "extended width {width} exceeds the cap of {cap} columns"
        )));
    }
    debug_assert!(width as f64 <= binomial(d, s).max(1.0) * ((k + s + 1) as f64).powi(power as i32));

    let mut matrix = DenseMatrix::zeros(n, width);
    for (i, terms) in rows.iter().enumerate() {
        let row = matrix.row_mut(i);
        for (key, coef) in terms {
            row[index[key]] += coef;
        }
    }
    if !matrix.is_finite() {
        return Err(Error::NumericalFailure("extended matrix overflowed".into()));
    }
    Ok(LowRankSparseExtension {
        matrix,
        monomials: index.into_keys().collect(),
        right: ops.right.clone(),
    })
}

/// Tensor power used to linearize `<a_i, x>^p` for a general matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorPlan {
    pub r: u32,
    /// `p / 2^r`.
    pub q: f64,
}

impl TensorPlan {
    /// For `p >= 4`: `2^(r+1) <= p < 2^(r+2)`, so `q` lies in `[2, 4)`.
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 4.0) {
            return Err(Error::param(format!("tensor extension needs finite p >= 4, got {p}")));
        }
        let r = floor_log2(p) - 1;
        Ok(Self {
            r,
            q: p / 2f64.powi(r as i32),
        })
    }

    /// No extension: `r = 0`, `q = p`. Valid for `1 <= p < 4`.
    pub fn direct(p: f64) -> Result<Self> {
        if !(1.0..4.0).contains(&p) {
            return Err(Error::param(format!("direct sampling needs p in [1, 4), got {p}")));
        }
        Ok(Self { r: 0, q: p })
    }

    pub fn power(&self) -> usize {
        1 << self.r
    }

    /// `d^(2^r)`, or `None` on overflow.
    pub fn width(&self, d: usize) -> Option<usize> {
        d.checked_pow(self.power() as u32)
    }
}

/// `v^(⊗2^r)` in lexicographic index order.
pub fn tensor_power(v: &[f64], r: u32) -> Vec<f64> {
    let mut t = v.to_vec();
    for _ in 0..r {
        let mut next = Vec::with_capacity(t.len() * t.len());
        for a in &t {
            next.extend(t.iter().map(|b| a * b));
        }
        t = next;
    }
    t
}

pub fn extend_tensor(a: &DenseMatrix, plan: &TensorPlan) -> Result<DenseMatrix> {
    extend_tensor_capped(a, plan, DEFAULT_WIDTH_CAP)
}

pub fn extend_tensor_capped(a: &DenseMatrix, plan: &TensorPlan, cap: usize) -> Result<DenseMatrix> {
    let width = plan
        .width(a.ncols())
        .filter(|w| *w <= cap)
        .ok_or_else(|| {
            Error::UnsupportedSize(format!(
                "{}^{} tensor columns exceed the cap of {cap}",
                a.ncols(),
                plan.power()
            ))
        })?;
    let mut data = Vec::with_capacity(a.nrows() * width);
    for i in 0..a.nrows() {
        data.extend(tensor_power(a.row(i), plan.r));
    }
    DenseMatrix::new(a.nrows(), width, data)
        .map_err(|_| Error::NumericalFailure("tensor extension overflowed".into()))
}

/// Knobs shared by [`solve_lowrank_sparse_lp`] and [`solve_general_lp`].
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredConfig {
    pub p: f64,
    pub eps: f64,
    pub m1: Option<usize>,
    pub m2_per_group: Option<usize>,
    pub rounding: bool,
    pub lewis_iterations: usize,
    pub solve_tol: Option<f64>,
    pub target: FinalTarget,
    pub width_cap: usize,
}

impl StructuredConfig {
    pub fn new(p: f64, eps: f64) -> Self {
        Self {
            p,
            eps,
            m1: None,
            m2_per_group: None,
            rounding: true,
            lewis_iterations: DEFAULT_ITERATIONS,
            solve_tol: None,
            target: FinalTarget::Residual,
            width_cap: DEFAULT_WIDTH_CAP,
        }
    }
}

struct LowRankLin<'a> {
    ops: &'a LowRankPlusSparse,
    r: u32,
    cap: usize,
}

impl Linearization for LowRankLin<'_> {
    fn full(&self) -> Result<DenseMatrix> {
        Ok(extend_lowrank_sparse_capped(self.ops, self.r, self.cap)?.into_matrix())
    }

    fn group(&self, rows: &[usize], t: f64) -> Result<DenseMatrix> {
        let sub = self.ops.select(rows).augment(t);
        Ok(extend_lowrank_sparse_capped(&sub, self.r, self.cap)?.into_matrix())
    }
}

pub fn solve_lowrank_sparse_lp(
    ops: &LowRankPlusSparse,
    b: &[f64],
    cfg: &StructuredConfig,
    seed: u64,
) -> Result<PipelineOutput> {
    if !(cfg.p.is_finite() && cfg.p >= 1.0) {
        return Err(Error::param(format!("p must be finite and >= 1, got {}", cfg.p)));
    }
    let r = floor_log2(cfg.p);
    let q = cfg.p / 2f64.powi(r as i32);
    let lin = LowRankLin {
        ops,
        r,
        cap: cfg.width_cap,
    };
    // validates the guards before any sampling happens
    let ext = lin.full()?;
    let skel = SkeletonConfig {
        p: cfg.p,
        q,
        eps: cfg.eps,
        m1: cfg.m1.unwrap_or_else(|| default_samples(ext.ncols() as f64, 1.0)),
        m2_per_group: cfg.m2_per_group,
        rounding: cfg.rounding,
        lewis_iterations: cfg.lewis_iterations,
        solve_tol: final_tol(cfg.solve_tol, cfg.eps),
        target: cfg.target,
    };
    pipeline::run(&ops.to_dense(), b, &lin, &skel, None, seed)
}

struct TensorLin<'a> {
    a: &'a DenseMatrix,
    plan: TensorPlan,
    cap: usize,
    d_pow: f64,
}

impl Linearization for TensorLin<'_> {
    fn full(&self) -> Result<DenseMatrix> {
        extend_tensor_capped(self.a, &self.plan, self.cap)
    }

    fn group(&self, rows: &[usize], t: f64) -> Result<DenseMatrix> {
        let d = self.a.ncols();
        let mut data = Vec::with_capacity(rows.len() * (d + 1));
        for &i in rows {
            data.extend_from_slice(self.a.row(i));
            data.push(-t);
        }
        let aug = DenseMatrix::new(rows.len(), d + 1, data)?;
        extend_tensor_capped(&aug, &self.plan, self.cap)
    }

    fn default_group_samples(&self, _width: usize, eps: f64) -> usize {
        default_samples(self.d_pow, eps.powi(5))
    }
}

fn general_plan(p: f64) -> Result<TensorPlan> {
    if p >= 4.0 {
        TensorPlan::new(p)
    } else {
        TensorPlan::direct(p)
    }
}

fn checked_plan(d: usize, p: f64, cap: usize) -> Result<TensorPlan> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param(format!("p must be finite and >= 1, got {p}")));
    }
    let plan = general_plan(p)?;
    if plan.width(d).is_none_or(|w| w > cap) {
        return Err(Error::UnsupportedSize(format!(
            "{d}^{} tensor columns exceed the cap of {cap}",
            plan.power()
        )));
    }
    Ok(plan)
}

/// First-stage Lewis weights of the tensor extension of `a`, reusable across
/// calls to [`solve_general_lp_with_weights`] on the same matrix.
pub fn general_lewis_weights(a: &DenseMatrix, cfg: &StructuredConfig) -> Result<LewisWeights> {
    let plan = checked_plan(a.ncols(), cfg.p, cfg.width_cap)?;
    approx_lewis_weights(&extend_tensor_capped(a, &plan, cfg.width_cap)?, plan.q, cfg.lewis_iterations)
}

/// ℓp regression for an arbitrary matrix through `ℓ_q` Lewis weights of its
/// tensor powers. Below `p = 4` the rows are sampled directly.
pub fn solve_general_lp(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &StructuredConfig,
    seed: u64,
) -> Result<PipelineOutput> {
    general(a, b, cfg, None, seed)
}

pub fn solve_general_lp_with_weights(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &StructuredConfig,
    weights: &LewisWeights,
    seed: u64,
) -> Result<PipelineOutput> {
    general(a, b, cfg, Some(weights.weights()), seed)
}

fn general(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &StructuredConfig,
    weights: Option<&[f64]>,
    seed: u64,
) -> Result<PipelineOutput> {
    let d = a.ncols();
    let plan = checked_plan(d, cfg.p, cfg.width_cap)?;
    let d_pow = (d.max(2) as f64).powf(cfg.p / 2.0);
    let m1 = cfg.m1.unwrap_or_else(|| {
        let m = (10.0 * d_pow * (d.max(2) as f64).ln()).ceil();
        if m < a.nrows() as f64 {
            (m as usize).max(d)
        } else {
            a.nrows()
        }
    });
    let skel = SkeletonConfig {
        p: cfg.p,
        q: plan.q,
        eps: cfg.eps,
        m1,
        m2_per_group: cfg.m2_per_group,
        rounding: cfg.rounding,
        lewis_iterations: cfg.lewis_iterations,
        solve_tol: final_tol(cfg.solve_tol, cfg.eps),
        target: cfg.target,
    };
    let lin = TensorLin {
        a,
        plan,
        cap: cfg.width_cap,
        d_pow,
    };
    pipeline::run(a, b, &lin, &skel, weights, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn dm(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let plan = TensorPlan { r: 1, q: 2.0 };
        let m = extend_tensor(&dm(&[&[1.0, 2.0]]), &plan).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0, 2.0, 4.0]);
        let plan = TensorPlan { r: 2, q: 2.0 };
        let m = extend_tensor(&dm(&[&[1.0, 0.0, 0.0]]), &plan).unwrap();
        assert_eq!(m.ncols(), 81);
        assert_eq!(m.row(0)[0], 1.0);
        assert_eq!(m.row(0).iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn tensor_plan_range_and_cap() {
        let mut p = 4.0;
        while p <= 128.0 {
            let plan = TensorPlan::new(p).unwrap();
            assert!((2.0..4.0).contains(&plan.q), "p={p}");
            p += 0.41;
        }
        assert!(TensorPlan::new(3.9).is_err());
        let plan = TensorPlan::new(16.0).unwrap();
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            extend_tensor(&a, &plan),
            Err(Error::UnsupportedSize(_))
        ));
    }

    #[test]
    fn rank_one_and_one_sparse() {
        let ops = LowRankPlusSparse::new(
            dm(&[&[2.0], &[-1.0]]),
            dm(&[&[1.0, 3.0]]),
            vec![vec![], vec![]],
            0,
        )
        .unwrap();
        let ext = extend_lowrank_sparse(&ops, 1).unwrap();
        assert_eq!(ext.matrix().ncols(), 1);
        assert_eq!(ext.matrix().row(0), &[4.0]);
        assert_eq!(ext.features(&[1.0, 1.0]).unwrap(), vec![16.0]);

        let ops = LowRankPlusSparse::new(
            DenseMatrix::zeros(2, 0),
            DenseMatrix::zeros(0, 2),
            vec![vec![(0, 3.0)], vec![(1, 2.0)]],
            1,
        )
        .unwrap();
        let ext = extend_lowrank_sparse(&ops, 2).unwrap();
        assert_eq!(ext.matrix().ncols(), 2);
        assert_eq!(ext.matrix().row(0), &[81.0, 0.0]);
        assert_eq!(ext.features(&[2.0, 1.0]).unwrap(), vec![16.0, 1.0]);
    }

    #[test]
    fn mixed_square_expansion() {
        // (alpha <v,x> + beta x_c)^2 with three monomials per pattern
        let (alpha, beta) = (1.5, -0.7);
        let ops = LowRankPlusSparse::new(
            dm(&[&[alpha]]),
            dm(&[&[0.3, -2.0]]),
            vec![vec![(1, beta)]],
            1,
        )
        .unwrap();
        let ext = extend_lowrank_sparse(&ops, 1).unwrap();
        assert_eq!(ext.matrix().ncols(), 3);
        let x = [0.9, 1.7];
        let a = ops.to_dense();
        let lhs = dot(a.row(0), &x).powi(2);
        let rhs = dot(ext.matrix().row(0), &ext.features(&x).unwrap());
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn guards_refuse_large_requests() {
        let ops = LowRankPlusSparse::new(
            DenseMatrix::zeros(1, 6),
            DenseMatrix::zeros(6, 3),
            vec![vec![(0, 1.0)]],
            1,
        )
        .unwrap();
        assert!(matches!(
            extend_lowrank_sparse(&ops, 1),
            Err(Error::UnsupportedSize(_))
        ));
        assert!(LowRankPlusSparse::new(
            DenseMatrix::zeros(1, 1),
            DenseMatrix::zeros(1, 3),
            vec![vec![(0, 1.0), (1, 1.0)]],
            1,
        )
        .is_err());
    }

    #[test]
    fn augmented_group_matches_shifted_power() {
        let ops = LowRankPlusSparse::new(
            dm(&[&[1.0, -0.5], &[0.2, 2.0]]),
            dm(&[&[1.0, 0.0, 2.0], &[0.5, 1.0, -1.0]]),
            vec![vec![(2, 0.4)], vec![]],
            1,
        )
        .unwrap();
        let t = 1.3;
        let aug = ops.augment(t);
        let ext = extend_lowrank_sparse(&aug, 2).unwrap();
        let a = ops.to_dense();
        let x = [0.3, -1.1, 0.8];
        let y = ext.features(&[x[0], x[1], x[2], 1.0]).unwrap();
        for i in 0..2 {
            let lhs = (dot(a.row(i), &x) - t).powi(4);
            let rhs = dot(ext.matrix().row(i), &y);
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn general_exact_fit() {
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin(), t.cos(), (1.3 * t).sin() + 0.1]
            })
            .collect();
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let x0 = [1.0, -2.0, 0.5];
        let b = a.matvec(&x0);
        let mut cfg = StructuredConfig::new(4.0, 0.2);
        cfg.m1 = Some(60);
        cfg.m2_per_group = Some(30);
        let out = solve_general_lp(&a, &b, &cfg, 4).unwrap();
        for (u, v) in out.x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-6);
        }
    }
}
