//! Rounding residuals onto a geometric grid and grouping equal values.
//!
//! After rounding, a residual vector takes `O(log n / eps)` distinct values,
//! and within each group the regression target is a single constant.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Rows grouped by their rounded value.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    values: Vec<f64>,
    groups: Vec<Vec<usize>>,
}

impl GroupPartition {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[usize])> {
        self.values
            .iter()
            .copied()
            .zip(self.groups.iter().map(Vec::as_slice))
    }
}

/// The grid exponent `k` with `(1+eps)^k <= v < (1+eps)^(k+1)`, for `v > 0`.
fn grid_exponent(v: f64, base: f64) -> i32 {
    let mut k = (v.ln() / base.ln()).floor() as i32;
    // correct the floating-point floor in either direction
    while base.powi(k) > v {
        k -= 1;
    }
    while base.powi(k + 1) <= v {
        k += 1;
    }
    k
}

/// Rounds every entry down (in magnitude) to a power of `1 + eps` and zeroes
/// entries whose rounded magnitude is at most `max_i |b_i| / n^5`.
///
/// With a single entry the threshold equals the entry itself, so the
/// comparison is strict in that case.
pub fn round_trunc(b: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("cannot round non-finite entries"));
    }
    let n = b.len();
    let max = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let base = 1.0 + eps;
    let threshold = max / (n as f64).powi(5);
    Ok(b.iter()
        .map(|&v| {
            if v == 0.0 {
                return 0.0;
            }
            let x = base.powi(grid_exponent(v.abs(), base));
            let drop = if n == 1 { x < threshold } else { x <= threshold };
            if drop {
                0.0
            } else {
                x.copysign(v)
            }
        })
        .collect())
}

/// Ordering key: larger magnitudes first, positive before negative, zero
/// last.
fn group_key(v: f64) -> (bool, std::cmp::Reverse<u64>, bool) {
    (v == 0.0, std::cmp::Reverse(v.abs().to_bits()), v < 0.0)
}

/// Partitions row indices by exact value of a rounded vector.
pub fn partition_groups(b2: &[f64]) -> GroupPartition {
    let mut map: BTreeMap<_, (f64, Vec<usize>)> = BTreeMap::new();
    for (i, &v) in b2.iter().enumerate() {
        // fold -0.0 into 0.0
        let v = if v == 0.0 { 0.0 } else { v };
        map.entry(group_key(v)).or_insert_with(|| (v, Vec::new())).1.push(i);
    }
    let (values, groups) = map.into_values().unzip();
    GroupPartition { values, groups }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        // floor(log_1.1 100) = 48, floor(log_1.1 3) = 11, floor(log_1.1 0.5) = -8;
        // 1e-9 lies below 100 / 4^5.
        let out = round_trunc(&[100.0, -3.0, 0.5, 1e-9], 0.1).unwrap();
        let expect = [97.017, -2.8531, 0.46651, 0.0];
        for (o, e) in out.iter().zip(expect) {
            if e == 0.0 {
                assert_eq!(*o, 0.0);
            } else {
                assert!(((o - e) / e).abs() < 5e-5, "{o} vs {e}");
            }
        }
    }

    #[test]
    fn zero_vector_and_single_entry() {
        assert_eq!(round_trunc(&[0.0, 0.0], 0.3).unwrap(), vec![0.0, 0.0]);
        assert_eq!(round_trunc(&[1.0], 0.5).unwrap(), vec![1.0]);
        assert_eq!(round_trunc(&[], 0.5).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn eps_validation() {
        assert!(round_trunc(&[1.0], 0.0).is_err());
        assert!(round_trunc(&[1.0], 1.0).is_err());
    }

    #[test]
    fn exact_grid_points_are_fixed() {
        let b: Vec<f64> = (-5..6).map(|k| 1.25f64.powi(k)).collect();
        let out = round_trunc(&b, 0.25).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn partition_examples() {
        let g = partition_groups(&[1.0, 1.0, 0.5]);
        assert_eq!(g.values(), &[1.0, 0.5]);
        assert_eq!(g.groups(), &[vec![0, 1], vec![2]]);

        let g = partition_groups(&[0.0, 0.0, 0.0]);
        assert_eq!(g.values(), &[0.0]);
        assert_eq!(g.groups(), &[vec![0, 1, 2]]);

        let g = partition_groups(&[0.0, -2.0, 2.0, -0.0, 0.5, -2.0]);
        assert_eq!(g.values(), &[2.0, -2.0, 0.5, 0.0]);
        assert_eq!(g.groups(), &[vec![2], vec![1, 5], vec![4], vec![0, 3]]);
    }
}
