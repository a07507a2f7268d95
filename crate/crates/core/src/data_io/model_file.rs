//! Versioned JSON model files.
//!
//! The architecture is stored as a layer descriptor list and the parameters
//! as flat arrays, one per weight/bias tensor, in layer order. Floats are
//! written in shortest round-trip form so save/load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::recording::StudyId;
use crate::error::{Error, Result};
use crate::nn::{AvgPool1d, CnnModel, Conv1d, Dense, Layer, ModelMetadata};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerDescriptor {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        padding: usize,
    },
    Relu,
    Avgpool {
        window: usize,
        stride: usize,
        padding: usize,
    },
    Flatten,
    Dense {
        inputs: usize,
        outputs: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterArray {
    pub layer: usize,
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: Option<u64>,
    pub epochs: usize,
    pub source_study: Option<StudyId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub input_channels: usize,
    pub input_len: usize,
    pub layers: Vec<LayerDescriptor>,
    pub parameters: Vec<ParameterArray>,
    pub metadata: TrainingMetadata,
}

impl ModelFile {
    pub fn from_model(model: &CnnModel) -> Self {
        let mut layers = Vec::with_capacity(model.layers.len());
        let mut parameters = Vec::new();
        for (i, layer) in model.layers.iter().enumerate() {
            let mut push = |suffix: &str, values: &[f64]| {
                parameters.push(ParameterArray {
                    layer: i,
                    name: format!("{}{i}.{suffix}", layer.kind()),
                    values: values.to_vec(),
                })
            };
            layers.push(match layer {
                Layer::Conv1d(c) => {
                    push("weight", &c.weights);
                    push("bias", &c.bias);
                    LayerDescriptor::Conv1d {
                        in_channels: c.in_channels,
                        out_channels: c.out_channels,
                        kernel: c.kernel,
                        padding: c.padding,
                    }
                }
                Layer::Relu => LayerDescriptor::Relu,
                Layer::AvgPool(p) => LayerDescriptor::Avgpool {
                    window: p.window,
                    stride: p.stride,
                    padding: p.padding,
                },
                Layer::Flatten => LayerDescriptor::Flatten,
                Layer::Dense(d) => {
                    push("weight", &d.weights);
                    push("bias", &d.bias);
                    LayerDescriptor::Dense {
                        inputs: d.inputs,
                        outputs: d.outputs,
                    }
                }
            });
        }
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            input_channels: model.input_channels,
            input_len: model.input_len,
            layers,
            parameters,
            metadata: TrainingMetadata {
                seed: model.metadata.seed,
                epochs: model.metadata.epochs,
                source_study: model.metadata.source_study,
            },
        }
    }

    pub fn into_model(self) -> Result<CnnModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: self.format_version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let mut params = self.parameters.into_iter();
        let mut take = |layer: usize, what: &str, expected: usize| -> Result<Vec<f64>> {
            let p = params
                .next()
                .ok_or_else(|| Error::validation(format!("layer {layer}: missing {what} array")))?;
            if p.layer != layer || p.values.len() != expected {
                return Err(Error::validation(format!(
                    "layer {layer}: {what} array `{}` has {} values, expected {expected}",
                    p.name,
                    p.values.len()
                )));
            }
            Ok(p.values)
        };
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, desc) in self.layers.into_iter().enumerate() {
            layers.push(match desc {
                LayerDescriptor::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    padding,
                } => Layer::Conv1d(Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    padding,
                    weights: take(i, "weight", out_channels * in_channels * kernel)?,
                    bias: take(i, "bias", out_channels)?,
                }),
                LayerDescriptor::Relu => Layer::Relu,
                LayerDescriptor::Avgpool {
                    window,
                    stride,
                    padding,
                } => Layer::AvgPool(AvgPool1d {
                    window,
                    stride,
                    padding,
                }),
                LayerDescriptor::Flatten => Layer::Flatten,
                LayerDescriptor::Dense { inputs, outputs } => Layer::Dense(Dense {
                    inputs,
                    outputs,
                    weights: take(i, "weight", inputs * outputs)?,
                    bias: take(i, "bias", outputs)?,
                }),
            });
        }
        if let Some(extra) = params.next() {
            return Err(Error::validation(format!(
                "unexpected parameter array `{}` for layer {}",
                extra.name, extra.layer
            )));
        }
        if let Some(bad) = layers.iter().enumerate().find(|(_, l)| {
            !matches!(l, Layer::Relu | Layer::Flatten | Layer::AvgPool(_)) && !finite(l)
        }) {
            return Err(Error::validation(format!(
                "layer {}: non-finite parameter",
                bad.0
            )));
        }
        let mut model = CnnModel::new(self.input_channels, self.input_len, layers)?;
        model.metadata = ModelMetadata {
            seed: self.metadata.seed,
            epochs: self.metadata.epochs,
            source_study: self.metadata.source_study,
        };
        Ok(model)
    }
}

fn finite(layer: &Layer) -> bool {
    match layer {
        Layer::Conv1d(c) => c.weights.iter().chain(&c.bias).all(|v| v.is_finite()),
        Layer::Dense(d) => d.weights.iter().chain(&d.bias).all(|v| v.is_finite()),
        _ => true,
    }
}

pub fn save_model(model: &CnnModel, path: &Path) -> Result<()> {
    let json =
        serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model serialization");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<CnnModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        what: "model file",
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    file.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> CnnModel {
        CnnModel::smm_detector(9, 90).unwrap().initialize(99, 0.01)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = model();
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.parameters().iter().zip(m.parameters()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn unsupported_version() {
        let mut f = ModelFile::from_model(&model());
        f.format_version = 999;
        assert!(matches!(
            f.into_model(),
            Err(Error::UnsupportedVersion { found: 999, .. })
        ));
    }

    #[test]
    fn truncated_array_names_the_layer() {
        let mut f = ModelFile::from_model(&model());
        f.parameters[2].values.pop();
        let err = f.into_model().unwrap_err().to_string();
        assert!(err.contains("layer 3"), "{err}");
        assert!(err.contains("conv1d3.weight"), "{err}");
    }

    #[test]
    fn descriptor_json_shape() {
        let f = ModelFile::from_model(&model());
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["layers"][0]["kind"], "conv1d");
        assert_eq!(v["layers"][2]["kind"], "avgpool");
        assert_eq!(v["layers"][9]["kind"], "flatten");
        assert_eq!(f.parameters.len(), 10);
    }
}
