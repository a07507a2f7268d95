use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default band edges (Hz) for 90 Hz data.
pub const DEFAULT_BAND_EDGES_HZ: [f64; 7] = [0.1, 1.0, 3.0, 6.0, 10.0, 20.0, 45.0];

// Negated comparisons below also reject NaN edges.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_band_edges(edges: &[f64], rate_hz: f64) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::validation("band edges: need at least two edges"));
    }
    if edges[0] < 0.0 || *edges.last().unwrap() > rate_hz / 2.0 {
        return Err(Error::validation(format!(
            "band edges must lie in [0, {}], got {edges:?}",
            rate_hz / 2.0
        )));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::validation(format!(
            "band edges must be strictly increasing, got {edges:?}"
        )));
    }
    Ok(())
}

/// Band containing `freq`: `[low, high)`, except the top edge is inclusive
/// so a cover up to Nyquist includes the Nyquist bin.
pub fn band_of(freq: f64, edges: &[f64]) -> Option<usize> {
    let last = edges.len() - 1;
    if freq == edges[last] {
        return Some(last - 1);
    }
    edges.windows(2).position(|w| w[0] <= freq && freq < w[1])
}

/// Frequency of DFT bin `k` for a length-`n` transform, folded to `[0, rate/2]`.
pub fn bin_frequency(k: usize, n: usize, rate_hz: f64) -> f64 {
    k.min(n - k) as f64 * rate_hz / n as f64
}

pub(crate) fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(len)
}

pub(crate) fn band_powers_with(
    fft: &dyn Fft<f64>,
    x: &[f64],
    rate_hz: f64,
    edges: &[f64],
    out: &mut Vec<f64>,
) {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let mut powers = vec![0.0; edges.len() - 1];
    for (k, z) in buf.iter().enumerate() {
        if let Some(b) = band_of(bin_frequency(k, n, rate_hz), edges) {
            powers[b] += z.norm_sqr() / n as f64;
        }
    }
    out.extend(powers);
}

/// Per channel, per band: `Σ |DFT_k|² / d` over bins whose (folded)
/// frequency falls in the band.
pub fn dft_band_powers(
    channels: &[&[f64]],
    rate_hz: f64,
    band_edges_hz: &[f64],
) -> Result<Vec<f64>> {
    validate_band_edges(band_edges_hz, rate_hz)?;
    let mut out = Vec::with_capacity(channels.len() * (band_edges_hz.len() - 1));
    if let Some(first) = channels.first() {
        let fft = forward_fft(first.len());
        for ch in channels {
            band_powers_with(fft.as_ref(), ch, rate_hz, band_edges_hz, &mut out);
        }
    }
    Ok(out)
}

pub(crate) fn band_label(edges: &[f64], b: usize) -> String {
    format!("{}_{}hz", edges[b], edges[b + 1])
}

pub fn band_power_names(c: usize, edges: &[f64]) -> Vec<String> {
    (0..c)
        .flat_map(|ch| {
            (0..edges.len() - 1).map(move |b| format!("ch{ch}_dft_{}", band_label(edges, b)))
        })
        .collect()
}
