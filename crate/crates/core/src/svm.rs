//! Linear soft-margin SVM trained by stochastic subgradient descent.
//!
//! Minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ(w·x̃ᵢ + b))` on standardized
//! features `x̃`, equivalently `λ/2 ‖w‖² + (1/n) Σ hinge` with
//! `λ = 1/(C n)`. Steps use `η_t = 1/(λ t)` (Pegasos); the bias is not
//! regularized. The returned model is the average of the iterates over the
//! second half of training.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// Training-set feature means.
    pub feature_mean: Vec<f64>,
    /// Training-set population standard deviations; 1.0 for constant features.
    pub feature_scale: Vec<f64>,
}

/// Primal objective on standardized rows, used for monitoring.
fn objective(xs: &[Vec<f64>], y: &[i8], w: &[f64], b: f64, c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = xs
        .iter()
        .zip(y)
        .map(|(x, &yi)| (1.0 - f64::from(yi) * (dot(w, x) + b)).max(0.0))
        .sum();
    reg + c * hinge
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn standardization(f: ArrayView2<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let n = f.nrows() as f64;
    let mut mean = vec![0.0; f.ncols()];
    let mut scale = vec![0.0; f.ncols()];
    for (j, col) in f.columns().into_iter().enumerate() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        mean[j] = m;
        scale[j] = if sd > 1e-12 * m.abs().max(1.0) {
            sd
        } else {
            1.0
        };
    }
    (mean, scale)
}

/// Objective sampled at evenly spaced steps during training.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmTrace {
    pub initial_objective: f64,
    /// `(step, objective of the current iterate)`.
    pub checkpoints: Vec<(usize, f64)>,
    pub total_steps: usize,
}

pub fn svm_train(f: ArrayView2<'_, f64>, y: &[i8], cfg: &SvmConfig) -> Result<SvmModel> {
    svm_train_traced(f, y, cfg, 0).map(|(m, _)| m)
}

/// As [`svm_train`], also recording the objective at `n_checkpoints` steps.
pub fn svm_train_traced(
    f: ArrayView2<'_, f64>,
    y: &[i8],
    cfg: &SvmConfig,
    n_checkpoints: usize,
) -> Result<(SvmModel, SvmTrace)> {
    let (n, m) = f.dim();
    if y.len() != n {
        return Err(Error::validation(format!(
            "svm: {n} rows but {} labels",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::validation("svm: need at least 2 samples"));
    }
    if y.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::validation("svm: labels must be ±1"));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(Error::validation("svm: both classes must be present"));
    }
    if !(cfg.c.is_finite() && cfg.c > 0.0) || cfg.epochs == 0 {
        return Err(Error::validation(
            "svm: C must be positive and epochs at least 1",
        ));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("svm: non-finite feature value"));
    }

    let (mean, scale) = standardization(f);
    let xs: Vec<Vec<f64>> = f
        .rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .zip(mean.iter().zip(&scale))
                .map(|(v, (mu, s))| (v - mu) / s)
                .collect()
        })
        .collect();

    let lambda = 1.0 / (cfg.c * n as f64);
    let total = cfg.epochs * n;
    let avg_from = total / 2 + 1;
    let checkpoint_every = total
        .checked_div(n_checkpoints)
        .map_or(usize::MAX, |k| k.max(1));
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; m];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; m];
    let mut b_avg = 0.0;
    let mut n_avg = 0usize;
    let mut trace = SvmTrace {
        initial_objective: objective(&xs, y, &w, b, cfg.c),
        checkpoints: Vec::new(),
        total_steps: total,
    };
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = f64::from(y[i]);
            let violated = yi * (dot(&w, &xs[i]) + b) < 1.0;
            let decay = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= decay);
            if violated {
                w.iter_mut()
                    .zip(&xs[i])
                    .for_each(|(v, x)| *v += eta * yi * x);
                b += eta * yi;
            }
            if t >= avg_from {
                n_avg += 1;
                let k = 1.0 / n_avg as f64;
                w_avg
                    .iter_mut()
                    .zip(&w)
                    .for_each(|(a, v)| *a += (v - *a) * k);
                b_avg += (b - b_avg) * k;
            }
            if t.is_multiple_of(checkpoint_every) {
                trace.checkpoints.push((t, objective(&xs, y, &w, b, cfg.c)));
            }
        }
    }
    Ok((
        SvmModel {
            weights: w_avg,
            bias: b_avg,
            c: cfg.c,
            feature_mean: mean,
            feature_scale: scale,
        },
        trace,
    ))
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, m: usize) -> Result<()> {
        if m != self.dim() {
            return Err(Error::validation(format!(
                "svm: model has {} features, input has {m}",
                self.dim()
            )));
        }
        Ok(())
    }

    fn score(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .zip(self.feature_mean.iter().zip(&self.feature_scale))
                .map(|((v, w), (mu, s))| w * (v - mu) / s)
                .sum::<f64>()
    }

    pub fn decision_function(&self, f: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_dim(f.ncols())?;
        Ok(f.rows().into_iter().map(|r| self.score(r)).collect())
    }

    /// `sign(w·x̃ + b)` with `sign(0) = −1`.
    pub fn predict(&self, f: ArrayView2<'_, f64>) -> Result<Vec<i8>> {
        Ok(self
            .decision_function(f)?
            .iter()
            .map(|&s| if s > 0.0 { 1 } else { -1 })
            .collect())
    }
}

pub fn svm_predict(model: &SvmModel, f: ArrayView2<'_, f64>) -> Result<Vec<i8>> {
    model.predict(f)
}
