use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{mean_and_covariance, symmetric_eigen};

/// Project rows onto the leading `k` principal components. Each component's
/// sign is fixed so that its largest-magnitude loading is positive.
pub fn pca_project(x: ArrayView2<'_, f64>, k: usize) -> Result<Array2<f64>> {
    let (n, m) = x.dim();
    if n < 2 || k > m {
        return Err(Error::validation(format!(
            "pca: need ≥ 2 rows and k ≤ {m} features, got {n} rows, k = {k}"
        )));
    }
    let (mean, cov) = mean_and_covariance(x);
    let (_, vectors) = symmetric_eigen(&cov);
    let mut basis = vectors.slice(ndarray::s![.., ..k]).to_owned();
    for mut col in basis.columns_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
    Ok((&x - &mean).dot(&basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn axis_aligned_data() {
        // var(x) = 10, var(y) = 0.8, uncorrelated
        let x = array![
            [-4.0, 1.0],
            [-2.0, -1.0],
            [0.0, 0.0],
            [2.0, -1.0],
            [4.0, 1.0]
        ];
        let p = pca_project(x.view(), 2).unwrap();
        for i in 0..5 {
            assert!((p[[i, 0]].abs() - x[[i, 0]].abs()).abs() < 1e-9);
            assert!((p[[i, 1]].abs() - x[[i, 1]].abs()).abs() < 1e-9);
        }
    }
}
