use ndarray::Array2;

use crate::error::{Error, Result};

/// Class index for a ±1 label: −1 (no-SMM) → 0, +1 (SMM) → 1.
pub fn class_index(label: i8) -> usize {
    usize::from(label > 0)
}

/// Mean softmax cross-entropy and its gradient w.r.t. the logits.
pub fn softmax_xent(logits: &Array2<f64>, y: &[i8]) -> Result<(f64, Array2<f64>)> {
    let (n, k) = logits.dim();
    if y.len() != n {
        return Err(Error::validation(format!(
            "softmax_xent: {n} logit rows but {} labels",
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::validation(format!("label {bad} is not ±1")));
    }
    let mut grad = Array2::zeros((n, k));
    let mut loss = 0.0;
    for (i, row) in logits.outer_iter().enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        let target = class_index(y[i]);
        loss += log_z - row[target];
        for j in 0..k {
            let p = (row[j] - log_z).exp();
            grad[[i, j]] = (p - f64::from(u8::from(j == target))) / n as f64;
        }
    }
    Ok((loss / n as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_logits_give_ln2() {
        let (loss, _) = softmax_xent(&array![[0.0, 0.0], [0.0, 0.0]], &[1, -1]).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn extreme_logits_are_stable() {
        let (loss, grad) = softmax_xent(&array![[1000.0, -1000.0]], &[-1]).unwrap();
        assert!(loss.abs() < 1e-12 && loss.is_finite());
        assert!(grad.iter().all(|g| g.is_finite()));
        let (loss, _) = softmax_xent(&array![[1000.0, -1000.0]], &[1]).unwrap();
        assert!((loss - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let logits = array![[0.3, -1.2], [2.5, 0.7], [-0.4, -0.9]];
        let y = [1, -1, 1];
        let (_, grad) = softmax_xent(&logits, &y).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            for j in 0..2 {
                let mut plus = logits.clone();
                plus[[i, j]] += h;
                let mut minus = logits.clone();
                minus[[i, j]] -= h;
                let fd = (softmax_xent(&plus, &y).unwrap().0 - softmax_xent(&minus, &y).unwrap().0)
                    / (2.0 * h);
                let rel = (fd - grad[[i, j]]).abs() / fd.abs().max(grad[[i, j]].abs());
                assert!(rel < 1e-6, "({i},{j}): {fd} vs {}", grad[[i, j]]);
            }
        }
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(softmax_xent(&array![[0.0, 0.0]], &[0]).is_err());
        assert!(softmax_xent(&array![[0.0, 0.0]], &[1, 1]).is_err());
    }
}
