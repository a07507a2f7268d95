use super::model::{CnnModel, Gradients};

/// One SGD-with-momentum update: `v ← mu·v − lr·g`, `θ ← θ + v`.
pub fn sgd_momentum_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    mu: f64,
) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), velocity.len());
    for ((p, g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = mu * *v - lr * g;
        *p += *v;
    }
}

/// Momentum state for every parameter array of one model.
#[derive(Clone, Debug)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl SgdMomentum {
    pub fn new(model: &CnnModel, learning_rate: f64, momentum: f64) -> Self {
        SgdMomentum {
            learning_rate,
            momentum,
            velocity: model
                .parameters()
                .iter()
                .map(|p| vec![0.0; p.len()])
                .collect(),
        }
    }

    pub fn step(&mut self, model: &mut CnnModel, grads: &Gradients) {
        for ((p, g), v) in model
            .parameters_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.velocity)
        {
            sgd_momentum_step(p, g, v, self.learning_rate, self.momentum);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_plain_descent() {
        let mut p = [1.0];
        let mut v = [0.0];
        sgd_momentum_step(&mut p, &[1.0], &mut v, 0.1, 0.9);
        assert!((p[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn second_step_accumulates_momentum() {
        let mut p = [0.0];
        let mut v = [0.0];
        sgd_momentum_step(&mut p, &[1.0], &mut v, 0.1, 0.9);
        let before = p[0];
        sgd_momentum_step(&mut p, &[1.0], &mut v, 0.1, 0.9);
        assert!(((before - p[0]) - 0.19).abs() < 1e-15);
    }

    #[test]
    fn zero_momentum_is_gradient_descent() {
        let mut p = [2.0, -1.0];
        let mut v = [0.0, 0.0];
        for _ in 0..3 {
            sgd_momentum_step(&mut p, &[1.0, -2.0], &mut v, 0.5, 0.0);
        }
        assert_eq!(p, [0.5, 2.0]);
    }
}
