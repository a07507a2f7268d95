//! Recordings on disk, synthetic studies, and model files.

pub mod manifest;
pub mod model_file;
pub mod recording;
pub mod synth;

pub use manifest::{load_recordings, write_dataset, Manifest, ManifestEntry};
pub use model_file::{load_model, save_model, ModelFile, MODEL_FORMAT_VERSION};
pub use recording::{Annotation, Label, RawRecording, SensorStream, StudyId};
pub use synth::{synth_generate, SynthConfig};
