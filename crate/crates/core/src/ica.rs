//! Whitening and symmetric fixed-point ICA (log-cosh contrast).
//!
//! The sources returned here are the input of the subspace search: rows of `S` are
//! candidate independent components, later grouped into mutually independent subspaces.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::data::DataMatrix;
use crate::error::{MiscError, Result};
use crate::linalg::{covariance, symmetric_eigen, symmetric_function};

const WHITENING_RIDGE: f64 = 1e-12;
const MIN_EIGENVALUE: f64 = 1e-10;

/// Output of [`whiten`].
#[derive(Debug, Clone)]
pub struct Whitened {
    /// `d × n`, identity covariance.
    pub data: Array2<f64>,
    /// Symmetric inverse square root of the (ridged) covariance.
    pub transform: Array2<f64>,
    pub mean: Array1<f64>,
}

/// Centers `x` and maps it to identity covariance with the symmetric inverse square root.
pub fn whiten(x: &DataMatrix) -> Result<Whitened> {
    let values = x.values();
    let d = values.nrows();
    let mut cov = covariance(&values.view());
    cov.diag_mut().mapv_inplace(|v| v + WHITENING_RIDGE);
    let (eigvals, _) = symmetric_eigen(&cov.view());
    if eigvals[0] < MIN_EIGENVALUE {
        return Err(MiscError::RankDeficient {
            min_eigenvalue: eigvals[0],
        });
    }
    let transform = symmetric_function(&cov.view(), |l| 1.0 / l.sqrt());
    let mean = values.mean_axis(Axis(1)).expect("n >= 2");
    let centered = values - &mean.view().insert_axis(Axis(1));
    let data = transform.dot(&centered);
    debug_assert_eq!(data.nrows(), d);
    Ok(Whitened {
        data,
        transform,
        mean,
    })
}

/// Result of ICA on whitened data: `mixing · sources` reproduces the whitened input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceDecomposition {
    pub mixing: Array2<f64>,
    pub sources: Array2<f64>,
    /// Orthonormal rows, acting on whitened coordinates.
    pub unmixing: Array2<f64>,
    pub whitening_mean: Array1<f64>,
    pub whitening_transform: Array2<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl SourceDecomposition {
    /// Unmixing for centered raw data: `unmixing · whitening_transform`.
    pub fn full_unmixing(&self) -> Array2<f64> {
        self.unmixing.dot(&self.whitening_transform)
    }
}

/// Symmetric FastICA with the `tanh` nonlinearity.
#[derive(Debug, Clone)]
pub struct FastIca {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FastIca {
    fn default() -> Self {
        FastIca {
            max_iter: 500,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl FastIca {
    pub fn new(max_iter: usize, tol: f64, seed: u64) -> Self {
        FastIca { max_iter, tol, seed }
    }

    pub fn fit(&self, whitened: &Whitened) -> Result<SourceDecomposition> {
        if self.max_iter < 1 {
            return Err(MiscError::invalid("max_iter must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(MiscError::invalid(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        let x = &whitened.data;
        let (d, n) = x.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let init = Array2::from_shape_fn((d, d), |_| StandardNormal.sample(&mut rng));
        let mut w = sym_decorrelation(&init.view());

        let mut converged = false;
        let mut iterations = 0;
        for _ in 0..self.max_iter {
            iterations += 1;
            let projected = w.dot(x);
            let g = projected.mapv(f64::tanh);
            let g_prime_mean = g
                .mapv(|v| 1.0 - v * v)
                .mean_axis(Axis(1))
                .expect("n >= 1");
            let update = g.dot(&x.t()) / n as f64 - &w * &g_prime_mean.insert_axis(Axis(1));
            let w_new = sym_decorrelation(&update.view());

            let lim = w_new
                .outer_iter()
                .zip(w.outer_iter())
                .map(|(a, b)| (a.dot(&b).abs() - 1.0).abs())
                .fold(0.0, f64::max);
            w = w_new;
            if lim < self.tol {
                converged = true;
                break;
            }
        }

        let sources = w.dot(x);
        Ok(SourceDecomposition {
            mixing: w.t().to_owned(),
            sources,
            unmixing: w,
            whitening_mean: whitened.mean.clone(),
            whitening_transform: whitened.transform.clone(),
            converged,
            iterations,
        })
    }
}

/// Convenience wrapper: whiten then run [`FastIca`].
pub fn fast_ica(x: &DataMatrix, max_iter: usize, tol: f64, seed: u64) -> Result<SourceDecomposition> {
    FastIca::new(max_iter, tol, seed).fit(&whiten(x)?)
}

/// `W ← (W Wᵀ)^{-1/2} W`
fn sym_decorrelation(w: &ArrayView2<f64>) -> Array2<f64> {
    let gram = w.dot(&w.t());
    symmetric_function(&gram.view(), |l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()).dot(w)
}

/// Amari index of `m`, normalized to `[0, 1]`; zero iff `m` is a scaled permutation.
pub fn amari_error(m: &ArrayView2<f64>) -> Result<f64> {
    let (r, c) = m.dim();
    if r != c || r == 0 {
        return Err(MiscError::invalid("amari_error needs a non-empty square matrix"));
    }
    let abs = m.mapv(f64::abs);
    let row_max: Vec<f64> = abs.rows().into_iter().map(|row| row.fold(0.0f64, |a, &b| a.max(b))).collect();
    let col_max: Vec<f64> = abs.columns().into_iter().map(|col| col.fold(0.0f64, |a, &b| a.max(b))).collect();
    if row_max.iter().chain(&col_max).any(|&v| v == 0.0) {
        return Err(MiscError::invalid("amari_error needs no all-zero row or column"));
    }
    if r == 1 {
        return Ok(0.0);
    }
    let rows: f64 = abs
        .rows()
        .into_iter()
        .zip(&row_max)
        .map(|(row, mx)| row.sum() / mx - 1.0)
        .sum();
    let cols: f64 = abs
        .columns()
        .into_iter()
        .zip(&col_max)
        .map(|(col, mx)| col.sum() / mx - 1.0)
        .sum();
    Ok((rows + cols) / (2.0 * r as f64 * (r as f64 - 1.0)))
}
