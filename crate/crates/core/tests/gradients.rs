mod common;

use common::{check_model, check_softmax, small_nets};
use smm_detect::nn::{model_backward, CnnModel};

#[test]
fn analytic_gradients_match_central_differences() {
    for (name, net) in small_nets() {
        for seed in 0..3 {
            let err = check_model(net.clone(), seed);
            assert!(err < 1e-5, "{name}, seed {seed}: max rel err {err:e}");
        }
    }
    assert!(check_softmax(1) < 1e-5);
}

#[test]
fn full_net_gradients_on_a_subset() {
    // Full-size architecture, spot-checked on the output layer and the first conv filter.
    let model = CnnModel::smm_detector(9, 90).unwrap().initialize(4, 0.3);
    let x = ndarray::Array3::from_shape_fn((3, 9, 90), |(b, c, t)| {
        ((b * 7 + c * 3 + t) as f64 * 0.37).sin()
    });
    let y = [1, -1, 1];
    let (_, grads) = model_backward(&model, x.view(), &y).unwrap();
    let loss = |m: &CnnModel| model_backward(m, x.view(), &y).unwrap().0;
    let last = grads.len() - 2;
    for (a, i) in [(0, 0), (0, 17), (1, 2), (last, 3), (last + 1, 1)] {
        let mut plus = model.clone();
        plus.parameters_mut()[a][i] += 1e-5;
        let mut minus = model.clone();
        minus.parameters_mut()[a][i] -= 1e-5;
        let fd = (loss(&plus) - loss(&minus)) / 2e-5;
        assert!(
            common::rel_error(grads[a][i], fd) < 1e-5,
            "array {a}[{i}]: {} vs {fd}",
            grads[a][i]
        );
    }
}

#[test]
fn zero_output_gradient_gives_zero_parameter_gradients() {
    let model = CnnModel::smm_detector(9, 90).unwrap().initialize(1, 0.1);
    let x = ndarray::Array3::from_elem((2, 9, 90), 0.5);
    let acts = model.forward_all(x.view()).unwrap();
    let grads = model.backward(&acts, &ndarray::Array2::zeros((2, 2)));
    assert!(grads.iter().flatten().all(|&g| g == 0.0));
}

#[test]
fn batch_gradient_is_the_mean_of_sample_gradients() {
    let model = CnnModel::smm_detector(9, 90).unwrap().initialize(2, 0.2);
    let x = ndarray::Array3::from_shape_fn((4, 9, 90), |(b, c, t)| {
        ((b + 1) as f64 * 0.11 * (c * 90 + t) as f64).cos()
    });
    let y = [1, -1, -1, 1];
    let (_, batch) = model_backward(&model, x.view(), &y).unwrap();
    let mut mean: Vec<Vec<f64>> = batch.iter().map(|g| vec![0.0; g.len()]).collect();
    for b in 0..4 {
        let xb = x.slice(ndarray::s![b..b + 1, .., ..]);
        let (_, g) = model_backward(&model, xb, &y[b..b + 1]).unwrap();
        for (m, gi) in mean.iter_mut().zip(&g) {
            for (mv, v) in m.iter_mut().zip(gi) {
                *mv += v / 4.0;
            }
        }
    }
    for (m, g) in mean.iter().flatten().zip(batch.iter().flatten()) {
        assert!((m - g).abs() < 1e-12);
    }
}
