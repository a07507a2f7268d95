use crate::error::{Error, Result};

/// First-order high-pass IIR from the bilinear transform (with frequency
/// pre-warping) of the analog prototype `s / (s + ω_c)`:
///
/// `y[n] = b0·(x[n] − x[n−1]) + a1·y[n−1]`, zero initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighPass {
    pub b0: f64,
    pub a1: f64,
}

impl HighPass {
    pub fn design(cutoff_hz: f64, rate_hz: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && rate_hz.is_finite() && cutoff_hz < rate_hz / 2.0) {
            return Err(Error::validation(format!(
                "highpass: cutoff {cutoff_hz} Hz must lie in (0, {}) for rate {rate_hz} Hz",
                rate_hz / 2.0
            )));
        }
        let k = (std::f64::consts::PI * cutoff_hz / rate_hz).tan();
        Ok(HighPass {
            b0: 1.0 / (1.0 + k),
            a1: (1.0 - k) / (1.0 + k),
        })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut prev_x = 0.0;
        let mut prev_y = 0.0;
        x.iter()
            .map(|&v| {
                let y = self.b0 * (v - prev_x) + self.a1 * prev_y;
                prev_x = v;
                prev_y = y;
                y
            })
            .collect()
    }
}

pub fn highpass_filter(stream: &[f64], cutoff_hz: f64, rate_hz: f64) -> Result<Vec<f64>> {
    Ok(HighPass::design(cutoff_hz, rate_hz)?.apply(stream))
}
