use crate::error::{Error, Result};

/// Number of output samples whose times `j / to_hz` stay within the input span.
pub fn resampled_len(n: usize, from_hz: f64, to_hz: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let span = (n - 1) as f64 * to_hz / from_hz;
    (span + 1e-9).floor() as usize + 1
}

/// Linear-interpolation resampling. Output sample `j` is the input
/// interpolated at time `j / to_hz`; no extrapolation past the last input.
pub fn resample_linear(stream: &[f64], from_hz: f64, to_hz: f64) -> Result<Vec<f64>> {
    if !(from_hz > 0.0 && to_hz > 0.0 && from_hz.is_finite() && to_hz.is_finite()) {
        return Err(Error::validation(format!(
            "resample: rates must be positive, got {from_hz} -> {to_hz}"
        )));
    }
    if stream.len() < 2 {
        return Err(Error::validation(format!(
            "resample: need at least 2 samples, got {}",
            stream.len()
        )));
    }
    if from_hz == to_hz {
        return Ok(stream.to_vec());
    }
    let last = stream.len() - 1;
    let ratio = from_hz / to_hz;
    Ok((0..resampled_len(stream.len(), from_hz, to_hz))
        .map(|j| {
            let pos = j as f64 * ratio;
            let i = pos.floor() as usize;
            if i >= last {
                stream[last]
            } else {
                let frac = pos - i as f64;
                stream[i] + (stream[i + 1] - stream[i]) * frac
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stays_constant() {
        let out = resample_linear(&[5.0; 60], 60.0, 90.0).unwrap();
        // last output time 88/90 s stays within the 59/60 s input span
        assert_eq!(out.len(), 89);
        assert!(out.iter().all(|&v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn ramp_interpolates_exactly() {
        let ramp: Vec<f64> = (0..60).map(f64::from).collect();
        let out = resample_linear(&ramp, 60.0, 90.0).unwrap();
        assert!((out[3] - 2.0).abs() < 1e-12);
        for (j, v) in out.iter().enumerate() {
            assert!((v - 2.0 * j as f64 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn study1_length_scales_by_span() {
        let n = 60 * 120;
        let out = resample_linear(&vec![0.0; n], 60.0, 90.0).unwrap();
        assert_eq!(out.len(), ((n - 1) as f64 * 1.5).floor() as usize + 1);
        assert!((out.len() as f64 / n as f64 - 1.5).abs() < 1e-3);
    }

    #[test]
    fn identity_rate_is_unchanged() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(resample_linear(&x, 90.0, 90.0).unwrap(), x);
    }

    #[test]
    fn too_short_or_bad_rates() {
        assert!(resample_linear(&[1.0], 60.0, 90.0).is_err());
        assert!(resample_linear(&[1.0, 2.0], 0.0, 90.0).is_err());
        assert!(resample_linear(&[1.0, 2.0], 60.0, -1.0).is_err());
    }
}
