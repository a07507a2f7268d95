use ndarray::{Array1, Array2, Array3, ArrayView3};

use crate::error::{Error, Result};
use crate::linalg::{mean_and_covariance, symmetric_eigen};

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// ZCA whitening fitted on flattened training windows:
/// `z = W·(x − mean)` with `W = U·diag((λ + ε)^{−1/2})·Uᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZcaTransform {
    pub channels: usize,
    pub window_len: usize,
    pub mean: Array1<f64>,
    pub whitening_matrix: Array2<f64>,
    pub epsilon: f64,
}

impl ZcaTransform {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Fit on an `n × m` matrix of row vectors.
    pub fn fit_matrix(x: ndarray::ArrayView2<'_, f64>, epsilon: f64) -> Result<Self> {
        let (n, m) = x.dim();
        if n < 2 {
            return Err(Error::validation(format!(
                "zca: need at least 2 samples, got {n}"
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::validation(format!(
                "zca: epsilon must be non-negative, got {epsilon}"
            )));
        }
        let (mean, cov) = mean_and_covariance(x);
        let (values, vectors) = symmetric_eigen(&cov);
        let mut scales = Array1::zeros(m);
        for (s, &lambda) in scales.iter_mut().zip(&values) {
            let v = lambda.max(0.0) + epsilon;
            if v <= 0.0 {
                return Err(Error::validation(
                    "zca: covariance is singular; use epsilon > 0",
                ));
            }
            *s = v.powf(-0.5);
        }
        let scaled = &vectors * &scales;
        let w = scaled.dot(&vectors.t());
        let whitening_matrix = (&w + &w.t()) * 0.5;
        Ok(ZcaTransform {
            channels: 1,
            window_len: m,
            mean,
            whitening_matrix,
            epsilon,
        })
    }

    /// Whiten an `n × m` matrix of row vectors.
    pub fn apply_matrix(&self, x: ndarray::ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::validation(format!(
                "zca: transform has dimension {}, input has {}",
                self.dim(),
                x.ncols()
            )));
        }
        let centered = &x - &self.mean;
        // W is symmetric, so row-wise W·x equals X·W.
        Ok(centered.dot(&self.whitening_matrix))
    }
}

pub fn fit_zca(x: ArrayView3<'_, f64>, epsilon: f64) -> Result<ZcaTransform> {
    let (n, c, d) = x.dim();
    let flat = x
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((n, c * d))
        .expect("contiguous");
    let mut t = ZcaTransform::fit_matrix(flat.view(), epsilon)?;
    t.channels = c;
    t.window_len = d;
    Ok(t)
}

pub fn apply_zca(t: &ZcaTransform, x: ArrayView3<'_, f64>) -> Result<Array3<f64>> {
    let (n, c, d) = x.dim();
    if (c, d) != (t.channels, t.window_len) {
        return Err(Error::validation(format!(
            "zca: fitted on {}×{} windows, got {c}×{d}",
            t.channels, t.window_len
        )));
    }
    let flat = x
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((n, c * d))
        .expect("contiguous");
    Ok(t.apply_matrix(flat.view())?
        .into_shape_with_order((n, c, d))
        .expect("contiguous"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    /// Rows `±a·e_k` give zero mean and covariance diag(2a²·2/(n−1)) exactly.
    fn axis_data(variances: &[f64]) -> Array2<f64> {
        let m = variances.len();
        let mut rows = Vec::new();
        for (k, &v) in variances.iter().enumerate() {
            // 2 rows per axis, n = 2m; cov_kk = 2a²/(n−1) = v
            let a = (v * (2 * m - 1) as f64 / 2.0).sqrt();
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; m];
                r[k] = sign * a;
                rows.push(r);
            }
        }
        Array2::from_shape_vec((2 * m, m), rows.concat()).unwrap()
    }

    #[test]
    fn white_data_gives_identity() {
        let t = ZcaTransform::fit_matrix(axis_data(&[1.0, 1.0, 1.0]).view(), 0.0).unwrap();
        for ((i, j), v) in t.whitening_matrix.indexed_iter() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_covariance_closed_form() {
        let t = ZcaTransform::fit_matrix(axis_data(&[2.0, 0.5]).view(), 0.0).unwrap();
        let expect = array![[1.0 / 2f64.sqrt(), 0.0], [0.0, 2f64.sqrt()]];
        for (a, b) in t.whitening_matrix.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = t.apply_matrix(array![[2f64.sqrt(), 0.0]].view()).unwrap();
        assert!((z[[0, 0]] - 1.0).abs() < 1e-12 && z[[0, 1]].abs() < 1e-12);
    }

    #[test]
    fn own_data_is_whitened() {
        let mut rng = crate::rng::rng_from_seed(5);
        let mix = Array2::from_shape_fn((6, 6), |_| rng.random_range(-1.0..1.0));
        let raw = Array2::from_shape_fn((400, 6), |_| rng.random_range(-1.0..1.0));
        let x = raw.dot(&mix);
        let t = ZcaTransform::fit_matrix(x.view(), 1e-12).unwrap();
        let z = t.apply_matrix(x.view()).unwrap();
        let (mean, cov) = mean_and_covariance(z.view());
        assert!(mean.iter().all(|m| m.abs() < 1e-10));
        for ((i, j), v) in cov.indexed_iter() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-6, "({i},{j}) {v}");
        }
        for ((i, j), v) in t.whitening_matrix.indexed_iter() {
            assert_eq!(*v, t.whitening_matrix[[j, i]]);
        }
    }

    #[test]
    fn mean_maps_to_zero_and_identity_is_noop() {
        let x = Array3::from_shape_fn((5, 2, 3), |(a, b, c)| (a + 2 * b + 3 * c) as f64);
        let t = fit_zca(x.view(), 1e-3).unwrap();
        let means = Array3::from_shape_fn((4, 2, 3), |(_, b, c)| t.mean[b * 3 + c]);
        assert!(apply_zca(&t, means.view())
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-12));

        let id = ZcaTransform {
            channels: 2,
            window_len: 3,
            mean: Array1::zeros(6),
            whitening_matrix: Array2::eye(6),
            epsilon: 0.0,
        };
        assert_eq!(apply_zca(&id, x.view()).unwrap(), x);
    }

    #[test]
    fn errors() {
        assert!(fit_zca(Array3::zeros((1, 2, 3)).view(), 1e-5).is_err());
        let t = fit_zca(
            Array3::from_shape_fn((4, 2, 3), |(a, b, c)| (a * b + c) as f64).view(),
            1e-5,
        )
        .unwrap();
        assert!(apply_zca(&t, Array3::zeros((1, 3, 2)).view()).is_err());
    }
}
