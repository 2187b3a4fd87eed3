//! Small dense helpers shared by the numerical modules.
//!
//! Symmetric eigendecompositions go through `nalgebra`; everything else stays in `ndarray`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

pub(crate) fn to_nalgebra(a: &ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigenvalues (ascending) and matching eigenvector columns of a symmetric matrix.
pub fn symmetric_eigen(a: &ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let eig = SymmetricEigen::new(to_nalgebra(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = from_nalgebra(&eig.eigenvectors);
    (values, vectors.select(Axis(1), &order))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &ArrayView2<f64>) -> f64 {
    symmetric_eigen(a).0[0]
}

/// `V · diag(f(λ)) · Vᵀ` for a symmetric matrix.
pub(crate) fn symmetric_function(a: &ArrayView2<f64>, f: impl Fn(f64) -> f64) -> Array2<f64> {
    let (values, vectors) = symmetric_eigen(a);
    let scaled = &vectors * &values.mapv(f).insert_axis(Axis(0));
    scaled.dot(&vectors.t())
}

/// Population covariance of the rows (features) of a `d × n` matrix.
pub fn covariance(x: &ArrayView2<f64>) -> Array2<f64> {
    let n = x.ncols() as f64;
    let mean = x.mean_axis(Axis(1)).expect("non-empty");
    let centered = x - &mean.insert_axis(Axis(1));
    centered.dot(&centered.t()) / n
}

/// Squared Euclidean distances between the columns of a `m × n` matrix.
pub fn pairwise_sq_distances(x: &ArrayView2<f64>) -> Array2<f64> {
    let n = x.ncols();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = x
                .column(i)
                .iter()
                .zip(x.column(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    out
}

/// Log-determinant of a symmetric positive definite matrix, `None` if not SPD.
pub(crate) fn log_det_spd(a: &ArrayView2<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(to_nalgebra(a))?;
    Some(chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum())
}

/// Solves `A · X = B` for symmetric positive definite `A`.
pub(crate) fn solve_spd(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Option<Array2<f64>> {
    let chol = nalgebra::Cholesky::new(to_nalgebra(a))?;
    Some(from_nalgebra(&chol.solve(&to_nalgebra(b))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let r = symmetric_function(&a.view(), |l| l.powf(-0.5));
        let back = r.dot(&a).dot(&r);
        for ((i, j), v) in back.indexed_iter() {
            assert_abs_diff_eq!(*v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenvalues_ascend() {
        let (vals, _) = symmetric_eigen(&array![[2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 5.0]].view());
        assert_eq!(vals.to_vec(), vec![-1.0, 2.0, 5.0]);
    }

    #[test]
    fn log_det_matches_product() {
        let a = array![[2.0, 0.5], [0.5, 1.0]];
        assert_abs_diff_eq!(log_det_spd(&a.view()).unwrap(), (1.75f64).ln(), epsilon = 1e-12);
        assert!(log_det_spd(&array![[1.0, 2.0], [2.0, 1.0]].view()).is_none());
    }
}
