//! Discrete Stockwell transform via the frequency-domain algorithm.
//!
//! With `H[m] = (1/N) Σ_t x[t] e^{−2πimt/N}`, voice `n ≥ 1` is
//! `S[τ, n] = Σ_m H[m + n] · exp(−2π² m² / n²) · e^{2πimτ/N}` with `m` taken
//! in the symmetric range `(−N/2, N/2]` and indices modulo `N`. Voice 0 is
//! the signal mean. Summing a voice over time recovers the DFT:
//! `(1/N) Σ_τ S[τ, n] = H[n]`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::spectral::{band_label, band_of, validate_band_edges};
use crate::error::{Error, Result};

/// Planned transforms and Gaussian windows for one signal length.
pub struct StockwellPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `gaussians[n - 1][m]` for voices `1..=len/2`.
    gaussians: Vec<Vec<f64>>,
}

impl StockwellPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::validation(format!(
                "stockwell: need N ≥ 2, got {len}"
            )));
        }
        let mut planner = FftPlanner::new();
        let gaussians = (1..=len / 2)
            .map(|n| {
                (0..len)
                    .map(|m| {
                        let signed = if m <= len / 2 {
                            m as f64
                        } else {
                            m as f64 - len as f64
                        };
                        (-2.0 * PI * PI * signed * signed / (n * n) as f64).exp()
                    })
                    .collect()
            })
            .collect();
        Ok(StockwellPlan {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            gaussians,
        })
    }

    pub fn n_voices(&self) -> usize {
        self.len / 2 + 1
    }

    /// `(len/2 + 1) × len` matrix; row `n` is voice `n` over time.
    pub fn transform(&self, signal: &[Complex64]) -> Result<Array2<Complex64>> {
        if signal.len() != self.len {
            return Err(Error::validation(format!(
                "stockwell: plan is for N = {}, got {}",
                self.len,
                signal.len()
            )));
        }
        let n = self.len;
        let mut spectrum = signal.to_vec();
        self.forward.process(&mut spectrum);
        spectrum.iter_mut().for_each(|z| *z /= n as f64);

        let mut out = Array2::zeros((self.n_voices(), n));
        out.row_mut(0).fill(spectrum[0]);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for voice in 1..self.n_voices() {
            let g = &self.gaussians[voice - 1];
            for (m, b) in buf.iter_mut().enumerate() {
                *b = spectrum[(m + voice) % n] * g[m];
            }
            self.inverse.process(&mut buf);
            out.row_mut(voice)
                .iter_mut()
                .zip(&buf)
                .for_each(|(o, b)| *o = *b);
        }
        Ok(out)
    }
}

pub fn stockwell_transform_complex(signal: &[Complex64]) -> Result<Array2<Complex64>> {
    StockwellPlan::new(signal.len())?.transform(signal)
}

pub fn stockwell_transform(signal: &[f64]) -> Result<Array2<Complex64>> {
    let z: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    stockwell_transform_complex(&z)
}

/// Voice → band assignment; voice 0 (DC) joins the lowest band.
fn voice_bands(len: usize, rate_hz: f64, edges: &[f64]) -> Vec<Option<usize>> {
    (0..=len / 2)
        .map(|n| {
            if n == 0 {
                Some(0)
            } else {
                band_of(n as f64 * rate_hz / len as f64, edges)
            }
        })
        .collect()
}

pub(crate) fn stockwell_features_with(
    plan: &StockwellPlan,
    x: &[f64],
    rate_hz: f64,
    edges: &[f64],
    out: &mut Vec<f64>,
) -> Result<()> {
    let n_bands = edges.len() - 1;
    let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let s = plan.transform(&z)?;
    let bands = voice_bands(x.len(), rate_hz, edges);
    let mut members = vec![Vec::new(); n_bands];
    for (voice, b) in bands.iter().enumerate() {
        if let Some(b) = b {
            members[*b].push(voice);
        }
    }
    let len = x.len() as f64;
    for voices in &members {
        if voices.is_empty() {
            out.extend([0.0, 0.0]);
            continue;
        }
        // per time step: mean magnitude over the band's voices
        let agg: Vec<f64> = (0..x.len())
            .map(|t| voices.iter().map(|&v| s[[v, t]].norm()).sum::<f64>() / voices.len() as f64)
            .collect();
        let mean = agg.iter().sum::<f64>() / len;
        let var = agg.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / len;
        out.extend([mean, var.sqrt()]);
    }
    Ok(())
}

/// Per channel, per band: mean and standard deviation over time of the
/// band-averaged S-transform magnitude.
pub fn stockwell_features(
    channels: &[&[f64]],
    rate_hz: f64,
    band_edges_hz: &[f64],
) -> Result<Vec<f64>> {
    validate_band_edges(band_edges_hz, rate_hz)?;
    let mut out = Vec::new();
    if let Some(first) = channels.first() {
        let plan = StockwellPlan::new(first.len())?;
        for ch in channels {
            stockwell_features_with(&plan, ch, rate_hz, band_edges_hz, &mut out)?;
        }
    }
    Ok(out)
}

pub fn stockwell_names(c: usize, edges: &[f64]) -> Vec<String> {
    (0..c)
        .flat_map(|ch| {
            (0..edges.len() - 1).flat_map(move |b| {
                ["mean", "std"].map(|s| format!("ch{ch}_st_{}_{s}", band_label(edges, b)))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::spectral::DEFAULT_BAND_EDGES_HZ;

    /// S-transform straight from the definition, O(N³).
    fn brute_force(x: &[Complex64]) -> Array2<Complex64> {
        let n = x.len();
        let h: Vec<Complex64> = (0..n)
            .map(|m| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| {
                        v * Complex64::from_polar(1.0, -2.0 * PI * (m * t) as f64 / n as f64)
                    })
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect();
        Array2::from_shape_fn((n / 2 + 1, n), |(voice, tau)| {
            if voice == 0 {
                return h[0];
            }
            let lo = -((n as isize - 1) / 2);
            (lo..=(n as isize / 2))
                .map(|m| {
                    let g = (-2.0 * PI * PI * (m * m) as f64 / (voice * voice) as f64).exp();
                    let idx = (m + voice as isize).rem_euclid(n as isize) as usize;
                    h[idx]
                        * g
                        * Complex64::from_polar(
                            1.0,
                            2.0 * PI * (m * tau as isize) as f64 / n as f64,
                        )
                })
                .sum()
        })
    }

    #[test]
    fn matches_definition() {
        for n in [8usize, 9, 16] {
            let x: Vec<Complex64> = (0..n)
                .map(|t| Complex64::new((t as f64 * 0.7).sin() + 0.2 * t as f64, 0.0))
                .collect();
            let fast = stockwell_transform_complex(&x).unwrap();
            let slow = brute_force(&x);
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert!((a - b).norm() < 1e-10, "N={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_signal() {
        assert!(stockwell_transform(&[0.0; 16])
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn too_short() {
        assert!(stockwell_transform(&[1.0]).is_err());
    }

    #[test]
    fn low_bin_exponential_concentrates_in_its_voice() {
        let n = 32;
        for k in 1..=3usize {
            let x: Vec<Complex64> = (0..n)
                .map(|t| Complex64::from_polar(1.0, 2.0 * PI * (k * t) as f64 / n as f64))
                .collect();
            let s = brute_force(&x);
            let energy = |row: usize| s.row(row).iter().map(|z| z.norm_sqr()).sum::<f64>();
            let total: f64 = (0..s.nrows()).map(energy).sum();
            assert!(energy(k) / total >= 0.9, "k={k}: {}", energy(k) / total);
            let fast = stockwell_transform_complex(&x).unwrap();
            assert!(
                (fast.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() - energy(k)).abs() < 1e-9
            );
        }
    }

    #[test]
    fn zero_and_constant_window_features() {
        let zero = [0.0; 90];
        assert!(stockwell_features(&[&zero], 90.0, &DEFAULT_BAND_EDGES_HZ)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let c = [3.0; 90];
        let f = stockwell_features(&[&c], 90.0, &DEFAULT_BAND_EDGES_HZ).unwrap();
        assert!((f[0] - 3.0).abs() < 1e-12);
        assert!(f[1].abs() < 1e-12);
        // remaining bands see only Gaussian leakage of the DC bin
        assert!(f[2..].iter().all(|v| v.abs() < 1e-7), "{f:?}");
    }

    #[test]
    fn sinusoid_band_dominates() {
        let x: Vec<f64> = (0..90)
            .map(|t| (2.0 * PI * 5.0 * t as f64 / 90.0).sin())
            .collect();
        let f = stockwell_features(&[&x], 90.0, &DEFAULT_BAND_EDGES_HZ).unwrap();
        let means: Vec<f64> = f.iter().step_by(2).copied().collect();
        for (b, m) in means.iter().enumerate() {
            if b != 2 {
                assert!(means[2] > *m, "band {b}: {m} vs {}", means[2]);
            }
        }
    }
}
