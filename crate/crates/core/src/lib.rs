//! Lewis weight sampling for `l_p` regression on structured matrices.
//!
//! Large `n×d` problems `min_x ||A x - b||_p` are reduced to a few hundred
//! reweighted rows chosen by the Lewis weights of a linearized matrix.
//! Polynomial, low-rank plus sparse and small dense matrices each have
//! their own linearization. See [`vandermonde::solve_vandermonde_lp`],
//! [`structured::solve_lowrank_sparse_lp`] and
//! [`structured::solve_general_lp`].
//!
//! ```
//! use lpcoreset::linalg::DenseMatrix;
//! use lpcoreset::structured::{solve_general_lp, StructuredConfig};
//!
//! let rows: Vec<[f64; 2]> = (0..500).map(|i| [1.0, (i as f64 * 0.37).sin()]).collect();
//! let a = DenseMatrix::from_rows(&rows).unwrap();
//! let b: Vec<f64> = rows.iter().map(|r| 2.0 - r[1]).collect();
//!
//! let out = solve_general_lp(&a, &b, &StructuredConfig::new(3.0, 0.2), 0).unwrap();
//! assert!((out.x[0] - 2.0).abs() < 1e-6 && (out.x[1] + 1.0).abs() < 1e-6);
//! ```

pub mod error;
pub mod experiments;
pub mod lewis;
pub mod linalg;
pub mod pipeline;
pub mod round_trunc;
pub mod seed;
pub mod solver;
pub mod structured;
pub mod vandermonde;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lewis-weights.md")]
    mod lewis_weights {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/vandermonde.md")]
    mod vandermonde {}
    #[doc = include_str!("../../../book/src/rounding.md")]
    mod rounding {}
    #[doc = include_str!("../../../book/src/structured.md")]
    mod structured {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
