//! Stereotypical motor movement (SMM) detection from multi-sensor
//! accelerometer recordings.
//!
//! The pipeline resamples and high-pass filters raw streams, cuts them into
//! overlapping one-second windows, balances and ZCA-whitens the training
//! windows, learns features with a small 1-D CNN, and classifies with a
//! linear SVM. The [`harness`] runs the raw, handcrafted, CNN and
//! transferred-CNN experiments under leave-one-subject-out evaluation.

pub mod cli;
pub mod data_io;
pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod signal;
pub mod svm;

pub use error::{Error, Result};
