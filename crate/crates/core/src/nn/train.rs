use ndarray::{Array3, ArrayView3, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::softmax_xent;
use super::model::{CnnModel, Gradients};
use super::optim::SgdMomentum;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, split, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub init_std: f64,
    /// Root seed; initialization and shuffling use derived sub-streams.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 30,
            batch_size: 64,
            init_std: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::validation(
                "train: learning_rate must be non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::validation("train: momentum must be in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("train: batch_size must be at least 1"));
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return Err(Error::validation("train: init_std must be non-negative"));
        }
        Ok(())
    }

    pub fn init_seed(&self) -> u64 {
        split(self.seed, &[stream::INIT])
    }

    pub fn shuffle_seed(&self) -> u64 {
        split(self.seed, &[stream::SHUFFLE])
    }
}

/// SMM detector architecture initialized from the config's init sub-stream.
pub fn init_model(input_channels: usize, input_len: usize, cfg: &TrainConfig) -> Result<CnnModel> {
    Ok(
        CnnModel::smm_detector(input_channels, input_len)?
            .initialize(cfg.init_seed(), cfg.init_std),
    )
}

/// Loss and exact parameter gradients of the mean softmax cross-entropy.
pub fn model_backward(
    model: &CnnModel,
    x: ArrayView3<'_, f64>,
    y: &[i8],
) -> Result<(f64, Gradients)> {
    let acts = model.forward_all(x)?;
    let (n, k, _) = acts.last().unwrap().dim();
    let logits = acts
        .last()
        .unwrap()
        .clone()
        .into_shape_with_order((n, k))
        .expect("contiguous logits");
    let (loss, dlogits) = softmax_xent(&logits, y)?;
    Ok((loss, model.backward(&acts, &dlogits)))
}

/// Minibatch SGD with momentum and per-epoch reshuffling.
/// Returns the per-epoch mean training loss (measured before each update).
pub fn train(
    mut model: CnnModel,
    x: &Array3<f64>,
    y: &[i8],
    cfg: &TrainConfig,
) -> Result<(CnnModel, Vec<f64>)> {
    cfg.validate()?;
    let n = x.dim().0;
    if n == 0 {
        return Err(Error::validation("train: empty training set"));
    }
    if y.len() != n {
        return Err(Error::validation(format!(
            "train: {n} windows but {} labels",
            y.len()
        )));
    }
    let mut opt = SgdMomentum::new(&model, cfg.learning_rate, cfg.momentum);
    let mut rng = rng_from_seed(cfg.shuffle_seed());
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<i8> = batch.iter().map(|&i| y[i]).collect();
            let (loss, grads) = model_backward(&model, xb.view(), &yb)?;
            total += loss * batch.len() as f64;
            opt.step(&mut model, &grads);
        }
        history.push(total / n as f64);
    }
    model.metadata.epochs += cfg.epochs;
    Ok((model, history))
}
