//! Dense row-major matrices, implicit Vandermonde matrices, sampling
//! matrices and the small factorizations the solvers are built on.
//!
//! Everything here works at "desk scale": a few thousand rows and at most a
//! few hundred columns. Orthogonal factorizations are delegated to
//! `nalgebra`; this module owns the layout, the column equilibration and the
//! rank truncation policy.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A real matrix stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting shape mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::input(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::input(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T y`.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matvec_t dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// `A^T A`.
    pub fn gram(&self) -> DenseMatrix {
        let d = self.cols;
        let mut g = DenseMatrix::zeros(d, d);
        for i in 0..self.rows {
            let r = self.row(i);
            for j in 0..d {
                let rj = r[j];
                if rj == 0.0 {
                    continue;
                }
                for k in j..d {
                    g.data[j * d + k] += rj * r[k];
                }
            }
        }
        for j in 0..d {
            for k in 0..j {
                g.data[j * d + k] = g.data[k * d + j];
            }
        }
        g
    }

    /// The rows listed in `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix::from_raw(indices.len(), self.cols, data)
    }

    /// Multiplies row `i` by `scales[i]`.
    pub fn scale_rows(&self, scales: &[f64]) -> DenseMatrix {
        assert_eq!(scales.len(), self.rows);
        let mut out = self.clone();
        for (i, &s) in scales.iter().enumerate() {
            out.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Anything that can hand out its rows one at a time.
pub trait RowSource {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn write_row(&self, i: usize, out: &mut [f64]);
}

impl RowSource for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn write_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
}

/// An `n x degree` Vandermonde matrix held as its nodes; row `i` is
/// `[1, t_i, t_i^2, ..., t_i^(degree-1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeSpec {
    nodes: Vec<f64>,
    degree: usize,
}

impl VandermondeSpec {
    pub fn new(nodes: Vec<f64>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::param("Vandermonde degree must be at least 1"));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("Vandermonde nodes must be finite"));
        }
        Ok(Self { nodes, degree })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of columns.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Same nodes, different column count.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        Self::new(self.nodes.clone(), degree)
    }

    /// The Vandermonde matrix on a subset of the nodes.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            nodes: indices.iter().map(|&i| self.nodes[i]).collect(),
            degree: self.degree,
        }
    }
}

impl RowSource for VandermondeSpec {
    fn nrows(&self) -> usize {
        self.nodes.len()
    }

    fn ncols(&self) -> usize {
        self.degree
    }

    fn write_row(&self, i: usize, out: &mut [f64]) {
        let t = self.nodes[i];
        let mut acc = 1.0;
        for o in out.iter_mut() {
            *o = acc;
            acc *= t;
        }
    }
}

/// Writes out every entry of the implicit Vandermonde matrix.
pub fn materialize(spec: &VandermondeSpec) -> DenseMatrix {
    gather_rows(spec)
}

pub(crate) fn gather_rows<S: RowSource + ?Sized>(src: &S) -> DenseMatrix {
    let (n, d) = (src.nrows(), src.ncols());
    let mut out = DenseMatrix::zeros(n, d);
    for i in 0..n {
        src.write_row(i, out.row_mut(i));
    }
    out
}

/// Rows drawn from `[0, n)` together with their rescaling factors; the
/// sparse form of a sampling-and-rescaling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    indices: Vec<usize>,
    scales: Vec<f64>,
}

impl SampleSet {
    pub fn new(indices: Vec<usize>, scales: Vec<f64>) -> Result<Self> {
        if indices.len() != scales.len() {
            return Err(Error::input(format!(
                "{} indices but {} scales",
                indices.len(),
                scales.len()
            )));
        }
        if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::input(format!("sample scale {s} is not positive")));
        }
        Ok(Self { indices, scales })
    }

    /// Every row exactly once with scale 1.
    pub fn identity(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            scales: vec![1.0; n],
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Re-labels local indices through `map` (local row `j` becomes
    /// `map[j]`).
    pub fn remap(&self, map: &[usize]) -> Self {
        Self {
            indices: self.indices.iter().map(|&i| map[i]).collect(),
            scales: self.scales.clone(),
        }
    }

    /// Stacks several sample sets.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a SampleSet>) -> Self {
        let mut out = SampleSet {
            indices: Vec::new(),
            scales: Vec::new(),
        };
        for p in parts {
            out.indices.extend_from_slice(&p.indices);
            out.scales.extend_from_slice(&p.scales);
        }
        out
    }
}

/// Applies the sampling matrix to both sides of a regression problem.
pub fn apply_sample<S: RowSource + ?Sized>(
    sample: &SampleSet,
    a: &S,
    b: &[f64],
) -> Result<(DenseMatrix, Vec<f64>)> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::input(format!(
            "matrix has {n} rows but right-hand side has {}",
            b.len()
        )));
    }
    if let Some(&bad) = sample.indices.iter().find(|&&i| i >= n) {
        return Err(Error::input(format!("sample index {bad} out of range 0..{n}")));
    }
    let d = a.ncols();
    let mut out = DenseMatrix::zeros(sample.len(), d);
    let mut rhs = Vec::with_capacity(sample.len());
    for (j, (&i, &s)) in sample.indices.iter().zip(&sample.scales).enumerate() {
        let row = out.row_mut(j);
        a.write_row(i, row);
        row.iter_mut().for_each(|v| *v *= s);
        rhs.push(s * b[i]);
    }
    Ok((out, rhs))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(sum |v_i|^p)^(1/p)`, or `max |v_i|` for `p = inf`.
///
/// Entries are divided by the largest magnitude before powering, so large
/// exponents neither overflow nor underflow.
pub fn lp_norm(v: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param(format!("norm exponent must be >= 1, got {p}")));
    }
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if p.is_infinite() || max == 0.0 {
        return Ok(max);
    }
    let sum: f64 = v.iter().map(|x| (x.abs() / max).powf(p)).sum();
    Ok(max * sum.powf(1.0 / p))
}

/// `A x - b`.
pub fn residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.matvec(x).iter().zip(b).map(|(ax, bi)| ax - bi).collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    lp_norm(v, 2.0).expect("p = 2 is valid")
}

/// Solves `G z = rhs` for symmetric positive definite `G` by Cholesky.
///
/// If the factorization fails the solve is retried once on
/// `G + lambda I` with `lambda = 1e-12 trace(G) / d`.
pub fn solve_spd(g: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let d = g.nrows();
    if g.ncols() != d {
        return Err(Error::input(format!(
            "solve_spd needs a square matrix, got {}x{}",
            d,
            g.ncols()
        )));
    }
    if rhs.len() != d {
        return Err(Error::input(format!(
            "right-hand side has {} entries, expected {d}",
            rhs.len()
        )));
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let sym = DMatrix::from_fn(d, d, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)));
    let b = DVector::from_column_slice(rhs);

    let solve = |m: DMatrix<f64>| -> Option<Vec<f64>> {
        let chol = m.clone().cholesky()?;
        let mut z = chol.solve(&b);
        // one step of iterative refinement
        let r = &b - &m * &z;
        z += chol.solve(&r);
        z.iter().all(|v| v.is_finite()).then(|| z.as_slice().to_vec())
    };

    if let Some(z) = solve(sym.clone()) {
        return Ok(z);
    }
    let trace: f64 = (0..d).map(|i| sym[(i, i)]).sum();
    if !(trace > 0.0) {
        return Err(Error::NumericalFailure(
            "matrix is not positive definite (non-positive trace)".into(),
        ));
    }
    let lambda = 1e-12 * trace / d as f64;
    let ridged = sym + DMatrix::identity(d, d) * lambda;
    solve(ridged).ok_or_else(|| {
        Error::NumericalFailure("Cholesky failed even after ridge regularization".into())
    })
}

/// Column-equilibrated QR followed by an SVD of the triangular factor.
///
/// `B = A C^-1` has unit-norm columns; the factorization keeps the singular
/// triplets of `B` above `max(n, d) * eps * sigma_max`.
struct TruncatedFactor {
    col_scale: Vec<f64>,
    qr: nalgebra::linalg::QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// `V_k` (d x k) and `1 / sigma_k`.
    v: DMatrix<f64>,
    inv_sigma: Vec<f64>,
    /// `U_k^T` restricted to the leading `min(n, d)` coordinates.
    u_t: DMatrix<f64>,
}

impl TruncatedFactor {
    fn new(a: &DenseMatrix) -> Result<Self> {
        let (n, d) = (a.nrows(), a.ncols());
        if !a.is_finite() {
            return Err(Error::NumericalFailure("matrix has non-finite entries".into()));
        }
        let mut col_scale = vec![0.0; d];
        for i in 0..n {
            for (s, v) in col_scale.iter_mut().zip(a.row(i)) {
                *s += v * v;
            }
        }
        for s in col_scale.iter_mut() {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        let m = DMatrix::from_fn(n, d, |i, j| a.get(i, j) / col_scale[j]);
        let qr = m.qr();
        let r = qr.r();
        let svd = r.svd(true, true);
        let u = svd.u.ok_or_else(|| Error::NumericalFailure("SVD failed".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::NumericalFailure("SVD failed".into()))?;
        let sigma = &svd.singular_values;
        let smax = sigma.iter().cloned().fold(0.0, f64::max);
        let tol = smax * (n.max(d) as f64) * f64::EPSILON;
        let keep: Vec<usize> = (0..sigma.len())
            .filter(|&j| smax > 0.0 && sigma[j] > tol)
            .collect();
        let k = keep.len();
        let v = DMatrix::from_fn(d, k, |i, j| v_t[(keep[j], i)]);
        let u_t = DMatrix::from_fn(k, u.nrows(), |i, j| u[(j, keep[i])]);
        let inv_sigma = keep.iter().map(|&j| 1.0 / sigma[j]).collect();
        Ok(Self {
            col_scale,
            qr,
            v,
            inv_sigma,
            u_t,
        })
    }

    fn rank(&self) -> usize {
        self.inv_sigma.len()
    }
}

/// Minimum-norm least-squares solution of `min ||A x - b||_2`.
///
/// Numerically rank-deficient directions are dropped rather than amplified,
/// so this never fails on finite input.
pub fn lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (n, d) = (a.nrows(), a.ncols());
    if b.len() != n {
        return Err(Error::input(format!(
            "matrix has {n} rows but right-hand side has {}",
            b.len()
        )));
    }
    if n == 0 || d == 0 {
        return Ok(vec![0.0; d]);
    }
    let f = TruncatedFactor::new(a)?;
    let mut qtb = DVector::from_column_slice(b);
    f.qr.q_tr_mul(&mut qtb);
    let lead = qtb.rows(0, f.u_t.ncols());
    let mut coef = &f.u_t * lead;
    for (c, s) in coef.iter_mut().zip(&f.inv_sigma) {
        *c *= s;
    }
    let y = &f.v * coef;
    let x: Vec<f64> = y.iter().zip(&f.col_scale).map(|(v, s)| v / s).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("least-squares solution is not finite".into()));
    }
    Ok(x)
}

/// Statistical leverage scores `a_i^T (A^T A)^+ a_i` and the numerical rank.
pub fn leverage_scores(a: &DenseMatrix) -> Result<(Vec<f64>, usize)> {
    let (n, d) = (a.nrows(), a.ncols());
    if n == 0 || d == 0 {
        return Ok((vec![0.0; n], 0));
    }
    let f = TruncatedFactor::new(a)?;
    let k = f.rank();
    // P = C^-1 V_k S_k^-1, so that leverage_i = ||a_i P||^2.
    let mut p = vec![0.0; d * k];
    for i in 0..d {
        for j in 0..k {
            p[i * k + j] = f.v[(i, j)] * f.inv_sigma[j] / f.col_scale[i];
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut buf = vec![0.0; k];
    for i in 0..n {
        buf.iter_mut().for_each(|v| *v = 0.0);
        for (c, &aij) in a.row(i).iter().enumerate() {
            if aij == 0.0 {
                continue;
            }
            let prow = &p[c * k..(c + 1) * k];
            for (b, pv) in buf.iter_mut().zip(prow) {
                *b += aij * pv;
            }
        }
        out.push(buf.iter().map(|v| v * v).sum());
    }
    Ok((out, k))
}
