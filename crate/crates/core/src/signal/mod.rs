//! Raw recordings to whitened `n × channels × window` tensors.

pub mod filter;
pub mod resample;
pub mod window;
pub mod zca;

pub use filter::{highpass_filter, HighPass};
pub use resample::resample_linear;
pub use window::{
    balance_classes, balance_indices, preprocess, segment_windows, windows_from_recordings,
    PreprocessConfig, WindowConfig, WindowOrigin, WindowedDataset, NO_SMM, SMM,
};
pub use zca::{apply_zca, fit_zca, ZcaTransform};
