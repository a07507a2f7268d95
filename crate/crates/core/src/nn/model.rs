use ndarray::{Array2, Array3, ArrayView3, Ix2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{self, AvgPool1d, Conv1d, Dense};
use crate::data_io::StudyId;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const FILTER_LEN: usize = 9;
pub const CONV_FILTERS: [usize; 3] = [4, 4, 8];
pub const HIDDEN_UNITS: usize = 8;
pub const N_CLASSES: usize = 2;
pub const POOL: AvgPool1d = AvgPool1d {
    window: 3,
    stride: 2,
    padding: 1,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Conv1d(Conv1d),
    Relu,
    AvgPool(AvgPool1d),
    Flatten,
    Dense(Dense),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv1d(_) => "conv1d",
            Layer::Relu => "relu",
            Layer::AvgPool(_) => "avgpool",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    /// `(channels, length)` after this layer.
    pub fn output_shape(&self, (c, d): (usize, usize)) -> Result<(usize, usize)> {
        match self {
            Layer::Conv1d(l) => {
                if l.in_channels != c {
                    return Err(Error::validation(format!(
                        "conv1d expects {} channels, previous layer gives {c}",
                        l.in_channels
                    )));
                }
                Ok((l.out_channels, l.output_len(d)?))
            }
            Layer::Relu => Ok((c, d)),
            Layer::AvgPool(p) => Ok((c, p.output_len(d)?)),
            Layer::Flatten => Ok((c * d, 1)),
            Layer::Dense(l) => {
                if l.inputs != c * d {
                    return Err(Error::validation(format!(
                        "dense expects {} inputs, previous layer gives {}",
                        l.inputs,
                        c * d
                    )));
                }
                Ok((l.outputs, 1))
            }
        }
    }

    fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::Conv1d(l) => Some((&l.weights, &l.bias)),
            Layer::Dense(l) => Some((&l.weights, &l.bias)),
            _ => None,
        }
    }

    fn params_mut(&mut self) -> Option<(&mut Vec<f64>, &mut Vec<f64>)> {
        match self {
            Layer::Conv1d(l) => Some((&mut l.weights, &mut l.bias)),
            Layer::Dense(l) => Some((&mut l.weights, &mut l.bias)),
            _ => None,
        }
    }
}

/// Provenance carried alongside the parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub seed: Option<u64>,
    pub epochs: usize,
    pub source_study: Option<StudyId>,
}

/// A feed-forward 1-D CNN: an ordered stack of layers over `channels × length` input.
#[derive(Clone, Debug, PartialEq)]
pub struct CnnModel {
    pub input_channels: usize,
    pub input_len: usize,
    pub layers: Vec<Layer>,
    pub metadata: ModelMetadata,
}

/// Per-parameter-array gradients, in [`CnnModel::parameters`] order.
pub type Gradients = Vec<Vec<f64>>;

impl CnnModel {
    /// Validates that consecutive layer shapes fit together.
    pub fn new(input_channels: usize, input_len: usize, layers: Vec<Layer>) -> Result<Self> {
        let model = CnnModel {
            input_channels,
            input_len,
            layers,
            metadata: ModelMetadata::default(),
        };
        model.check_params()?;
        model.layer_shapes()?;
        Ok(model)
    }

    /// Three conv/ReLU/avg-pool blocks (4, 4, 8 filters of length 9), flatten,
    /// an 8-unit ReLU dense layer and a 2-way output layer. All weights zero.
    pub fn smm_detector(input_channels: usize, input_len: usize) -> Result<Self> {
        let mut layers = Vec::new();
        let mut c = input_channels;
        let mut d = input_len;
        for &filters in &CONV_FILTERS {
            let conv = Conv1d::same(c, filters, FILTER_LEN);
            d = conv.output_len(d)?;
            layers.push(Layer::Conv1d(conv));
            layers.push(Layer::Relu);
            d = POOL.output_len(d)?;
            layers.push(Layer::AvgPool(POOL));
            c = filters;
        }
        layers.push(Layer::Flatten);
        layers.push(Layer::Dense(Dense::zeros(c * d, HIDDEN_UNITS)));
        layers.push(Layer::Relu);
        layers.push(Layer::Dense(Dense::zeros(HIDDEN_UNITS, N_CLASSES)));
        CnnModel::new(input_channels, input_len, layers)
    }

    /// Draw every weight from `Normal(0, init_std²)` in layer order; biases zero.
    pub fn initialize(mut self, seed: u64, init_std: f64) -> Self {
        let normal = Normal::new(0.0, init_std).expect("init_std must be finite and non-negative");
        let mut rng = rng_from_seed(seed);
        for layer in &mut self.layers {
            if let Some((w, b)) = layer.params_mut() {
                w.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
                b.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        self.metadata = ModelMetadata {
            seed: Some(seed),
            epochs: 0,
            source_study: None,
        };
        self
    }

    fn check_params(&self) -> Result<()> {
        for (i, layer) in self.layers.iter().enumerate() {
            let (expect_w, expect_b, w, b) = match layer {
                Layer::Conv1d(l) => (
                    l.out_channels * l.in_channels * l.kernel,
                    l.out_channels,
                    l.weights.len(),
                    l.bias.len(),
                ),
                Layer::Dense(l) => (
                    l.inputs * l.outputs,
                    l.outputs,
                    l.weights.len(),
                    l.bias.len(),
                ),
                _ => continue,
            };
            if w != expect_w || b != expect_b {
                return Err(Error::validation(format!(
                    "layer {i} ({}): parameter lengths ({w}, {b}) do not match shape ({expect_w}, {expect_b})",
                    layer.kind()
                )));
            }
        }
        Ok(())
    }

    /// Shape after every layer, starting with the input.
    pub fn layer_shapes(&self) -> Result<Vec<(usize, usize)>> {
        let mut shapes = vec![(self.input_channels, self.input_len)];
        for (i, layer) in self.layers.iter().enumerate() {
            let next = layer
                .output_shape(*shapes.last().unwrap())
                .map_err(|e| Error::validation(format!("layer {i}: {e}")))?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    fn flatten_index(&self) -> Option<usize> {
        self.layers
            .iter()
            .rposition(|l| matches!(l, Layer::Flatten))
    }

    /// Length of the learned feature vector (the flatten layer's output).
    pub fn feature_len(&self) -> usize {
        let shapes = self.layer_shapes().expect("validated at construction");
        match self.flatten_index() {
            Some(i) => shapes[i + 1].0,
            None => 0,
        }
    }

    pub fn n_outputs(&self) -> usize {
        let shapes = self.layer_shapes().expect("validated at construction");
        let (c, d) = *shapes.last().unwrap();
        c * d
    }

    /// Immutable views of every parameter array: per parametrized layer,
    /// weights then bias.
    pub fn parameters(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers
            .iter_mut()
            .filter_map(Layer::params_mut)
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn n_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    /// True when both models have the same layer stack shapes.
    pub fn same_architecture(&self, other: &CnnModel) -> bool {
        self.input_channels == other.input_channels
            && self.input_len == other.input_len
            && self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| match (a, b) {
                    (Layer::Conv1d(x), Layer::Conv1d(y)) => {
                        (x.in_channels, x.out_channels, x.kernel, x.padding)
                            == (y.in_channels, y.out_channels, y.kernel, y.padding)
                    }
                    (Layer::Dense(x), Layer::Dense(y)) => {
                        (x.inputs, x.outputs) == (y.inputs, y.outputs)
                    }
                    (Layer::AvgPool(x), Layer::AvgPool(y)) => x == y,
                    (Layer::Relu, Layer::Relu) | (Layer::Flatten, Layer::Flatten) => true,
                    _ => false,
                })
    }

    fn check_input(&self, x: &ArrayView3<'_, f64>) -> Result<()> {
        let (_, c, d) = x.dim();
        if (c, d) != (self.input_channels, self.input_len) {
            return Err(Error::validation(format!(
                "model expects input {}×{}, got {c}×{d}",
                self.input_channels, self.input_len
            )));
        }
        Ok(())
    }

    /// Every intermediate activation, `acts[0]` is the input.
    pub fn forward_all(&self, x: ArrayView3<'_, f64>) -> Result<Vec<Array3<f64>>> {
        self.check_input(&x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.as_standard_layout().into_owned());
        for layer in &self.layers {
            let input = acts.last().unwrap();
            let out = match layer {
                Layer::Conv1d(l) => layers::conv1d_forward(input.view(), l)?,
                Layer::Relu => layers::relu(input),
                Layer::AvgPool(p) => layers::avgpool_forward(input.view(), p)?,
                Layer::Flatten => {
                    let (n, c, d) = input.dim();
                    input
                        .clone()
                        .into_shape_with_order((n, c * d, 1))
                        .expect("contiguous")
                }
                Layer::Dense(l) => layers::dense_forward(input.view(), l)?,
            };
            acts.push(out);
        }
        Ok(acts)
    }

    /// Learned features (flatten-layer activations) and output logits.
    pub fn forward(&self, x: ArrayView3<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let acts = self.forward_all(x)?;
        let features = match self.flatten_index() {
            Some(i) => to_matrix(&acts[i + 1]),
            None => Array2::zeros((acts[0].dim().0, 0)),
        };
        Ok((features, to_matrix(acts.last().unwrap())))
    }

    /// Flatten-layer features only, computed in chunks to bound memory.
    pub fn features(&self, x: ArrayView3<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let n = x.dim().0;
        let mut out = Array2::zeros((n, self.feature_len()));
        let stop = self.flatten_index().map_or(0, |i| i + 1);
        let truncated = CnnModel {
            input_channels: self.input_channels,
            input_len: self.input_len,
            layers: self.layers[..stop].to_vec(),
            metadata: ModelMetadata::default(),
        };
        const CHUNK: usize = 512;
        for start in (0..n).step_by(CHUNK) {
            let end = (start + CHUNK).min(n);
            let acts = truncated.forward_all(x.slice(ndarray::s![start..end, .., ..]))?;
            out.slice_mut(ndarray::s![start..end, ..])
                .assign(&to_matrix(acts.last().unwrap()));
        }
        Ok(out)
    }

    /// Reverse-mode pass from the gradient of the loss w.r.t. the logits.
    pub fn backward(&self, acts: &[Array3<f64>], dlogits: &Array2<f64>) -> Gradients {
        let (n, k) = dlogits.dim();
        let mut grad: Array3<f64> = dlogits
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((n, k, 1))
            .expect("contiguous");
        let mut per_layer: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; self.layers.len()];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            grad = match layer {
                Layer::Conv1d(l) => {
                    let (dx, dw, db) = layers::conv1d_backward(input.view(), grad.view(), l);
                    per_layer[i] = Some((dw, db));
                    dx
                }
                Layer::Relu => layers::relu_backward(input, &grad),
                Layer::AvgPool(p) => layers::avgpool_backward(&grad, input.dim().2, p),
                Layer::Flatten => grad.into_shape_with_order(input.dim()).expect("contiguous"),
                Layer::Dense(l) => {
                    let (dx, dw, db) = layers::dense_backward(input.view(), &grad, l);
                    per_layer[i] = Some((dw, db));
                    dx
                }
            };
        }
        per_layer
            .into_iter()
            .flatten()
            .flat_map(|(w, b)| [w, b])
            .collect()
    }
}

fn to_matrix(a: &Array3<f64>) -> Array2<f64> {
    let (n, c, d) = a.dim();
    a.as_standard_layout()
        .into_owned()
        .into_shape_with_order((n, c * d))
        .expect("contiguous")
        .into_dimensionality::<Ix2>()
        .expect("2-D")
}

/// Copy every parameter of `source` as the starting point for a new training run.
pub fn transfer_init(source: &CnnModel, target_architecture: &CnnModel) -> Result<CnnModel> {
    if !source.same_architecture(target_architecture) {
        return Err(Error::validation(format!(
            "transfer: architecture mismatch (source feature length {}, target {})",
            source.feature_len(),
            target_architecture.feature_len()
        )));
    }
    Ok(source.clone())
}
