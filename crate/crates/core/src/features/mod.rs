//! Handcrafted baseline features: time-domain statistics, DFT band powers
//! and Stockwell-transform band statistics.

pub mod spectral;
pub mod stockwell;
pub mod time_domain;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::signal::WindowedDataset;

pub use spectral::{dft_band_powers, DEFAULT_BAND_EDGES_HZ};
pub use stockwell::{
    stockwell_features, stockwell_transform, stockwell_transform_complex, StockwellPlan,
};
pub use time_domain::time_domain_features;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub names: Vec<String>,
}

pub fn feature_names(c: usize, band_edges_hz: &[f64]) -> Vec<String> {
    let mut names = time_domain::time_domain_names(c);
    names.extend(spectral::band_power_names(c, band_edges_hz));
    names.extend(stockwell::stockwell_names(c, band_edges_hz));
    names
}

/// Baseline feature vector for one `channels × length` window.
pub struct BaselineExtractor {
    rate_hz: f64,
    edges: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    stockwell: StockwellPlan,
}

impl BaselineExtractor {
    pub fn new(window_len: usize, rate_hz: f64, band_edges_hz: &[f64]) -> Result<Self> {
        spectral::validate_band_edges(band_edges_hz, rate_hz)?;
        if window_len < 2 {
            return Err(Error::validation(
                "features: window length must be at least 2",
            ));
        }
        Ok(BaselineExtractor {
            rate_hz,
            edges: band_edges_hz.to_vec(),
            fft: spectral::forward_fft(window_len),
            stockwell: StockwellPlan::new(window_len)?,
        })
    }

    pub fn extract(&self, window: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let rows: Vec<Vec<f64>> = window.outer_iter().map(|r| r.to_vec()).collect();
        let channels: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let mut out = time_domain_features(&channels);
        for ch in &channels {
            spectral::band_powers_with(self.fft.as_ref(), ch, self.rate_hz, &self.edges, &mut out);
        }
        for ch in &channels {
            stockwell::stockwell_features_with(
                &self.stockwell,
                ch,
                self.rate_hz,
                &self.edges,
                &mut out,
            )?;
        }
        Ok(out)
    }
}

/// Concatenate the three feature families for every window of `ds`.
pub fn extract_baseline_features(
    ds: &WindowedDataset,
    rate_hz: f64,
    band_edges_hz: &[f64],
) -> Result<FeatureMatrix> {
    let (n, c, d) = ds.x.dim();
    let names = feature_names(c, band_edges_hz);
    let extractor = BaselineExtractor::new(d, rate_hz, band_edges_hz)?;
    let mut values = Array2::zeros((n, names.len()));
    for (i, window) in ds.x.outer_iter().enumerate() {
        let f = extractor.extract(window)?;
        debug_assert_eq!(f.len(), names.len());
        values.row_mut(i).assign(&ndarray::Array1::from(f));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("features: non-finite feature value"));
    }
    Ok(FeatureMatrix { values, names })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn dataset(x: Array3<f64>) -> WindowedDataset {
        let n = x.dim().0;
        WindowedDataset {
            x,
            y: vec![1; n],
            subject_ids: vec!["S1".into(); n],
            origins: (0..n)
                .map(|i| crate::signal::WindowOrigin {
                    recording: "r".into(),
                    start: i,
                })
                .collect(),
        }
    }

    #[test]
    fn feature_count_for_nine_channels() {
        let ds = dataset(Array3::from_shape_fn((3, 9, 90), |(a, b, c)| {
            ((a + b * c) as f64 * 0.1).sin()
        }));
        let f = extract_baseline_features(&ds, 90.0, &DEFAULT_BAND_EDGES_HZ).unwrap();
        assert_eq!(f.values.dim(), (3, 234));
        assert_eq!(f.names.len(), 234);
        let unique: std::collections::HashSet<_> = f.names.iter().collect();
        assert_eq!(unique.len(), 234);
        let again = extract_baseline_features(&ds, 90.0, &DEFAULT_BAND_EDGES_HZ).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn zero_dataset_is_all_zero() {
        let ds = dataset(Array3::zeros((2, 9, 90)));
        let f = extract_baseline_features(&ds, 90.0, &DEFAULT_BAND_EDGES_HZ).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scaling_behaviour() {
        let x = Array3::from_shape_fn((1, 3, 90), |(_, b, c)| {
            ((b + 1) as f64 * c as f64 * 0.21).sin() + 0.1 * b as f64
        });
        let a = 2.5;
        let f1 =
            extract_baseline_features(&dataset(x.clone()), 90.0, &DEFAULT_BAND_EDGES_HZ).unwrap();
        let f2 = extract_baseline_features(&dataset(&x * a), 90.0, &DEFAULT_BAND_EDGES_HZ).unwrap();
        for (name, (u, v)) in f1.names.iter().zip(f1.values.iter().zip(f2.values.iter())) {
            let expect = if name.ends_with("_energy") || name.contains("_dft_") {
                u * a * a
            } else if name.ends_with("zero_crossings") || name.starts_with("corr_") {
                *u
            } else {
                u * a
            };
            assert!(
                (v - expect).abs() <= 1e-9 * expect.abs().max(1.0),
                "{name}: {u} -> {v}"
            );
        }
    }
}
