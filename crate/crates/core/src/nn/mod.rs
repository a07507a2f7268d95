//! Minimal 1-D CNN: convolution, ReLU, average pooling, flatten, dense,
//! softmax cross-entropy and SGD with momentum, all in `f64`.

pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod train;

pub use layers::{AvgPool1d, Conv1d, Dense};
pub use loss::softmax_xent;
pub use model::{transfer_init, CnnModel, Gradients, Layer, ModelMetadata};
pub use optim::{sgd_momentum_step, SgdMomentum};
pub use train::{init_model, model_backward, train, TrainConfig};
