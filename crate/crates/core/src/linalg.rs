//! Dense helpers shared by whitening and PCA.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Column means and the unbiased (n − 1) covariance of the rows of `x`.
pub fn mean_and_covariance(x: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let n = x.nrows();
    let mean = x.mean_axis(Axis(0)).expect("non-empty input");
    let centered = &x - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    (mean, cov)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending
/// order, eigenvectors as the matching columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let m = a.nrows();
    let mat = DMatrix::from_fn(m, m, |i, j| 0.5 * (a[[i, j]] + a[[j, i]]));
    let eig = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Array1::from_iter(order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = Array2::from_shape_fn((m, m), |(i, c)| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}
