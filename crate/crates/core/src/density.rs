//! Product-Gaussian kernel density estimation and the entropy coding cost built on it.
//!
//! Code lengths are in bits. Support points are scored leave-one-out so that a
//! sample's own kernel does not inflate its density.

use std::f64::consts::{LN_2, PI};

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{MiscError, Result};

/// Bandwidth used for rows with zero spread.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    support: Array2<f64>,
    bandwidths: Array1<f64>,
}

impl DensityModel {
    /// Builds a model from explicit bandwidths (one per row of `support`).
    pub fn new(support: Array2<f64>, bandwidths: Array1<f64>) -> Result<Self> {
        if support.nrows() != bandwidths.len() {
            return Err(MiscError::DimensionMismatch {
                expected: support.nrows(),
                found: bandwidths.len(),
            });
        }
        if support.ncols() == 0 {
            return Err(MiscError::invalid("density model needs at least one support point"));
        }
        if bandwidths.iter().any(|h| !(*h > 0.0)) {
            return Err(MiscError::invalid("bandwidths must be positive"));
        }
        Ok(DensityModel { support, bandwidths })
    }

    pub fn support(&self) -> &Array2<f64> {
        &self.support
    }

    pub fn bandwidths(&self) -> &Array1<f64> {
        &self.bandwidths
    }

    pub fn dim(&self) -> usize {
        self.support.nrows()
    }

    /// `log₂ f(x)` for each column of `points`.
    pub fn log2_density(&self, points: &ArrayView2<f64>) -> Result<Array1<f64>> {
        if points.nrows() != self.dim() {
            return Err(MiscError::DimensionMismatch {
                expected: self.dim(),
                found: points.nrows(),
            });
        }
        let support = self.scaled(&self.support.view());
        let queries = self.scaled(points);
        let norm = self.log_norm(self.support.ncols());
        Ok(queries
            .columns()
            .into_iter()
            .map(|q| {
                let exps: Vec<f64> = support
                    .columns()
                    .into_iter()
                    .map(|s| -0.5 * sq_dist(q.iter(), s.iter()))
                    .collect();
                (log_sum_exp(&exps) - norm) / LN_2
            })
            .collect())
    }

    /// `log₂ f₋ⱼ(xⱼ)` at every support point, where `f₋ⱼ` omits the kernel centered on `xⱼ`.
    pub fn log2_density_loo(&self) -> Result<Array1<f64>> {
        let n = self.support.ncols();
        if n < 2 {
            return Err(MiscError::invalid("leave-one-out needs at least two support points"));
        }
        let z = self.scaled(&self.support.view());
        let norm = self.log_norm(n - 1);
        let mut exps = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i + 1..n {
                let e = -0.5 * sq_dist(z.column(i).iter(), z.column(j).iter());
                exps[[i, j]] = e;
                exps[[j, i]] = e;
            }
        }
        let mut buf = Vec::with_capacity(n - 1);
        Ok((0..n)
            .map(|i| {
                buf.clear();
                buf.extend((0..n).filter(|&j| j != i).map(|j| exps[[i, j]]));
                (log_sum_exp(&buf) - norm) / LN_2
            })
            .collect())
    }

    fn scaled(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x / &self.bandwidths.view().insert_axis(Axis(1))
    }

    /// `ln(count) + Σᵢ ln(hᵢ √(2π))`
    fn log_norm(&self, count: usize) -> f64 {
        (count as f64).ln()
            + self
                .bandwidths
                .iter()
                .map(|h| (h * (2.0 * PI).sqrt()).ln())
                .sum::<f64>()
    }
}

fn sq_dist<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Silverman bandwidth `1.06 · σ · n^(−1/(4+m))` per row, σ the population standard deviation.
pub fn silverman_bandwidths(s: &ArrayView2<f64>) -> Array1<f64> {
    let (m, n) = s.dim();
    let factor = 1.06 * (n as f64).powf(-1.0 / (4.0 + m as f64));
    s.rows()
        .into_iter()
        .map(|row| {
            let mean = row.sum() / n as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let h = factor * var.sqrt();
            if h > BANDWIDTH_FLOOR {
                h
            } else {
                BANDWIDTH_FLOOR
            }
        })
        .collect()
}

/// Fits a product-Gaussian KDE to the columns of `s` (`m × n`).
pub fn fit_kde(s: &ArrayView2<f64>) -> Result<DensityModel> {
    if s.ncols() < 2 {
        return Err(MiscError::invalid(format!(
            "kernel density estimation needs n >= 2, got {}",
            s.ncols()
        )));
    }
    if s.nrows() == 0 {
        return Err(MiscError::invalid("kernel density estimation needs at least one row"));
    }
    DensityModel::new(s.to_owned(), silverman_bandwidths(s))
}

/// `Σⱼ log₂ 1/f(sⱼ)` with leave-one-out densities: the data part of the entropy cost.
pub fn code_length(s: &ArrayView2<f64>) -> Result<f64> {
    let model = fit_kde(s)?;
    Ok(-model.log2_density_loo()?.sum())
}

/// Entropy coding cost `m/2 · log₂ n + Σⱼ log₂ 1/f(sⱼ)` of the columns of `s`.
pub fn entropy_cost(s: &ArrayView2<f64>) -> Result<f64> {
    let (m, n) = s.dim();
    Ok(parameter_cost(m, n) + code_length(s)?)
}

/// `m/2 · log₂ n`
pub fn parameter_cost(m: usize, n: usize) -> f64 {
    m as f64 / 2.0 * (n as f64).log2()
}
