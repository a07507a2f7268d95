//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::StandardNormal;

use smm_detect::nn::{model_backward, softmax_xent, AvgPool1d, CnnModel, Conv1d, Dense, Layer};
use smm_detect::rng::rng_from_seed;

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor so that near-zero gradients compare absolutely.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Small nets over 2 channels × 12 samples, covering every layer kind and
/// both padded and unpadded convolution and pooling.
pub fn small_nets() -> Vec<(&'static str, CnnModel)> {
    let conv_pool_dense = CnnModel::new(
        2,
        12,
        vec![
            Layer::Conv1d(Conv1d::zeros(2, 3, 5, 2)),
            Layer::Relu,
            Layer::AvgPool(AvgPool1d {
                window: 3,
                stride: 2,
                padding: 1,
            }),
            Layer::Flatten,
            Layer::Dense(Dense::zeros(18, 2)),
        ],
    )
    .unwrap();
    let two_blocks = CnnModel::new(
        2,
        12,
        vec![
            Layer::Conv1d(Conv1d::zeros(2, 2, 3, 1)),
            Layer::Relu,
            Layer::AvgPool(AvgPool1d {
                window: 3,
                stride: 2,
                padding: 1,
            }),
            Layer::Conv1d(Conv1d::zeros(2, 3, 3, 1)),
            Layer::Relu,
            Layer::AvgPool(AvgPool1d {
                window: 3,
                stride: 2,
                padding: 1,
            }),
            Layer::Flatten,
            Layer::Dense(Dense::zeros(9, 4)),
            Layer::Relu,
            Layer::Dense(Dense::zeros(4, 2)),
        ],
    )
    .unwrap();
    let unpadded = CnnModel::new(
        2,
        12,
        vec![
            Layer::Conv1d(Conv1d::zeros(2, 2, 4, 0)),
            Layer::AvgPool(AvgPool1d {
                window: 2,
                stride: 3,
                padding: 0,
            }),
            Layer::Flatten,
            Layer::Dense(Dense::zeros(6, 2)),
        ],
    )
    .unwrap();
    vec![
        ("conv+pool+dense", conv_pool_dense),
        ("two conv blocks", two_blocks),
        ("unpadded", unpadded),
    ]
}

fn randomize(model: &mut CnnModel, seed: u64) {
    let mut rng = rng_from_seed(seed);
    for p in model.parameters_mut() {
        for v in p.iter_mut() {
            *v = 0.5 * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

fn random_batch(n: usize, c: usize, d: usize, seed: u64) -> (Array3<f64>, Vec<i8>) {
    let mut rng = rng_from_seed(seed);
    let x = Array3::from_shape_simple_fn((n, c, d), || rng.sample::<f64, _>(StandardNormal));
    let y = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    (x, y)
}

/// Max relative error between analytic parameter gradients and central
/// differences, over every parameter of `model` with random weights.
pub fn check_model(mut model: CnnModel, seed: u64) -> f64 {
    randomize(&mut model, seed);
    let (x, y) = random_batch(4, model.input_channels, model.input_len, seed ^ 0x5eed);
    let (_, grads) = model_backward(&model, x.view(), &y).unwrap();
    let loss = |m: &CnnModel| model_backward(m, x.view(), &y).unwrap().0;
    let mut worst = 0.0f64;
    for (a, grad) in grads.iter().enumerate() {
        for (i, &g) in grad.iter().enumerate() {
            let mut plus = model.clone();
            plus.parameters_mut()[a][i] += FD_STEP;
            let mut minus = model.clone();
            minus.parameters_mut()[a][i] -= FD_STEP;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(rel_error(g, fd));
        }
    }
    worst
}

/// Same comparison for the softmax cross-entropy gradient w.r.t. logits.
pub fn check_softmax(seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let logits =
        Array2::from_shape_simple_fn((5, 2), || 2.0 * rng.sample::<f64, _>(StandardNormal));
    let y: Vec<i8> = (0..5).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let (_, grad) = softmax_xent(&logits, &y).unwrap();
    let mut worst = 0.0f64;
    for idx in 0..logits.len() {
        let (i, j) = (idx / 2, idx % 2);
        let mut plus = logits.clone();
        plus[[i, j]] += FD_STEP;
        let mut minus = logits.clone();
        minus[[i, j]] -= FD_STEP;
        let fd = (softmax_xent(&plus, &y).unwrap().0 - softmax_xent(&minus, &y).unwrap().0)
            / (2.0 * FD_STEP);
        worst = worst.max(rel_error(grad[[i, j]], fd));
    }
    worst
}
