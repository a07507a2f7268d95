//! Python bindings: synthetic data, preprocessing, the CNN, and the LOSO
//! harness. Arrays cross the boundary as nested lists.

use std::path::PathBuf;

use ndarray::Array3;
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use smm_detect::data_io::{self, RawRecording, StudyId, SynthConfig};
use smm_detect::features;
use smm_detect::harness::{self, ExperimentKind, ExperimentSpec, SourceSpec, TransferSource};
use smm_detect::nn::{self, TrainConfig};
use smm_detect::rng::{split, stream};
use smm_detect::signal::{self, PreprocessConfig, WindowConfig, WindowedDataset};
use smm_detect::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_study(s: &str) -> PyResult<StudyId> {
    StudyId::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown study `{s}`")))
}

/// One subject's recording: 3 sensors × 3 axes plus SMM annotations.
#[pyclass(name = "Recording", module = "smm_detect", frozen, from_py_object)]
#[derive(Clone)]
struct PyRecording {
    inner: RawRecording,
}

#[pymethods]
impl PyRecording {
    #[getter]
    fn subject_id(&self) -> String {
        self.inner.subject_id.clone()
    }

    #[getter]
    fn study(&self) -> String {
        self.inner.study_id.to_string()
    }

    #[getter]
    fn sample_rate_hz(&self) -> f64 {
        self.inner.sample_rate_hz
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    /// Nine channels (torso, left, right × x, y, z), each a list of samples.
    fn channels(&self) -> Vec<Vec<f64>> {
        self.inner.channels()
    }

    /// `(start, end, label)` sample intervals, end exclusive.
    fn annotations(&self) -> Vec<(usize, usize, String)> {
        self.inner
            .annotations()
            .iter()
            .map(|a| (a.start, a.end, a.label.as_str().to_string()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Recording({}/{}, {} samples @ {} Hz)",
            self.inner.study_id,
            self.inner.subject_id,
            self.inner.n_samples(),
            self.inner.sample_rate_hz
        )
    }
}

#[pyfunction]
#[pyo3(signature = (n_subjects=None, duration_s=None, seed=None, study="study1", noise_std=None, burst_amplitude=None, burst_rate=None, burst_freq_range_hz=None))]
#[allow(clippy::too_many_arguments)]
fn synth_generate(
    n_subjects: Option<usize>,
    duration_s: Option<f64>,
    seed: Option<u64>,
    study: &str,
    noise_std: Option<f64>,
    burst_amplitude: Option<f64>,
    burst_rate: Option<f64>,
    burst_freq_range_hz: Option<(f64, f64)>,
) -> PyResult<Vec<PyRecording>> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        study_id: parse_study(study)?,
        n_subjects: n_subjects.unwrap_or(d.n_subjects),
        duration_s: duration_s.unwrap_or(d.duration_s),
        seed: seed.unwrap_or(d.seed),
        noise_std: noise_std.unwrap_or(d.noise_std),
        burst_amplitude: burst_amplitude.unwrap_or(d.burst_amplitude),
        smm_burst_rate: burst_rate.unwrap_or(d.smm_burst_rate),
        burst_freq_range_hz: burst_freq_range_hz.unwrap_or(d.burst_freq_range_hz),
        ..d
    };
    let recs = data_io::synth_generate(&cfg).map_err(py_err)?;
    Ok(recs
        .into_iter()
        .map(|inner| PyRecording { inner })
        .collect())
}

#[pyfunction]
fn load_recordings(manifest: PathBuf) -> PyResult<Vec<PyRecording>> {
    let recs = data_io::load_recordings(&manifest).map_err(py_err)?;
    Ok(recs
        .into_iter()
        .map(|inner| PyRecording { inner })
        .collect())
}

/// Write recordings as CSVs plus `manifest.json`; returns the manifest path.
#[pyfunction]
fn write_dataset(recordings: Vec<PyRecording>, dir: PathBuf) -> PyResult<String> {
    let recs: Vec<RawRecording> = recordings.into_iter().map(|r| r.inner).collect();
    let path = data_io::write_dataset(&recs, &dir).map_err(py_err)?;
    Ok(path.display().to_string())
}

#[pyfunction]
fn resample_linear(stream: Vec<f64>, from_hz: f64, to_hz: f64) -> PyResult<Vec<f64>> {
    signal::resample_linear(&stream, from_hz, to_hz).map_err(py_err)
}

#[pyfunction]
fn highpass_filter(stream: Vec<f64>, cutoff_hz: f64, rate_hz: f64) -> PyResult<Vec<f64>> {
    signal::highpass_filter(&stream, cutoff_hz, rate_hz).map_err(py_err)
}

/// Stockwell transform as rows of time, columns of voices 0..=N/2.
#[pyfunction]
fn stockwell_transform(signal: Vec<f64>) -> PyResult<Vec<Vec<Complex64>>> {
    let s = features::stockwell_transform(&signal).map_err(py_err)?;
    Ok(s.rows().into_iter().map(|r| r.to_vec()).collect())
}

#[pyfunction]
fn f1_score(y_true: Vec<i8>, y_pred: Vec<i8>) -> PyResult<f64> {
    harness::f1_score(&y_true, &y_pred).map_err(py_err)
}

/// Labelled windows (n × channels × window_len) with subject ids.
#[pyclass(name = "Windows", module = "smm_detect", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWindows {
    inner: WindowedDataset,
}

#[pymethods]
impl PyWindows {
    /// Resample, high-pass filter and segment recordings.
    #[staticmethod]
    #[pyo3(signature = (recordings, target_rate_hz=90.0, highpass_hz=0.1, window_len=90, step=10, smm_threshold=0.5))]
    fn from_recordings(
        recordings: Vec<PyRecording>,
        target_rate_hz: f64,
        highpass_hz: f64,
        window_len: usize,
        step: usize,
        smm_threshold: f64,
    ) -> PyResult<Self> {
        let recs: Vec<RawRecording> = recordings.into_iter().map(|r| r.inner).collect();
        let pre = PreprocessConfig {
            target_rate_hz,
            highpass_cutoff_hz: highpass_hz,
        };
        let win = WindowConfig {
            window_len,
            step,
            smm_fraction_threshold: smm_threshold,
        };
        let inner = signal::windows_from_recordings(&recs, &pre, &win).map_err(py_err)?;
        Ok(PyWindows { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }

    #[getter]
    fn window_len(&self) -> usize {
        self.inner.window_len()
    }

    #[getter]
    fn labels(&self) -> Vec<i8> {
        self.inner.y.clone()
    }

    #[getter]
    fn subject_ids(&self) -> Vec<String> {
        self.inner.subject_ids.clone()
    }

    /// `(smm, no_smm)` window counts.
    fn class_counts(&self) -> (usize, usize) {
        self.inner.class_counts()
    }

    fn window(&self, i: usize) -> PyResult<Vec<Vec<f64>>> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!("window {i} out of range")));
        }
        Ok(self
            .inner
            .x
            .slice(ndarray::s![i, .., ..])
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect())
    }

    fn select(&self, indices: Vec<usize>) -> PyResult<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.inner.len()) {
            return Err(PyValueError::new_err(format!("window {bad} out of range")));
        }
        Ok(PyWindows {
            inner: self.inner.select(&indices),
        })
    }

    /// Handcrafted features: `(names, rows)`.
    #[pyo3(signature = (rate_hz=90.0))]
    fn baseline_features(&self, rate_hz: f64) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
        let f = features::extract_baseline_features(
            &self.inner,
            rate_hz,
            &features::DEFAULT_BAND_EDGES_HZ,
        )
        .map_err(py_err)?;
        Ok((
            f.names,
            f.values.rows().into_iter().map(|r| r.to_vec()).collect(),
        ))
    }
}

fn to_batch(x: Vec<Vec<Vec<f64>>>) -> PyResult<Array3<f64>> {
    let n = x.len();
    let c = x.first().map_or(0, Vec::len);
    let d = x.first().and_then(|w| w.first()).map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(n * c * d);
    for w in &x {
        if w.len() != c || w.iter().any(|row| row.len() != d) {
            return Err(PyValueError::new_err(
                "ragged batch: every window must be channels × length",
            ));
        }
        w.iter().for_each(|row| flat.extend_from_slice(row));
    }
    Ok(Array3::from_shape_vec((n, c, d), flat).expect("shape checked"))
}

/// The three-convolution SMM detector CNN.
#[pyclass(name = "CnnModel", module = "smm_detect", skip_from_py_object)]
#[derive(Clone)]
struct PyCnnModel {
    inner: nn::CnnModel,
}

#[pymethods]
impl PyCnnModel {
    /// Untrained detector with all parameters zero; call `initialize`.
    #[new]
    #[pyo3(signature = (input_channels=9, input_len=90))]
    fn new(input_channels: usize, input_len: usize) -> PyResult<Self> {
        let inner = nn::CnnModel::smm_detector(input_channels, input_len).map_err(py_err)?;
        Ok(PyCnnModel { inner })
    }

    /// Weights ~ Normal(0, init_std²), biases zero.
    #[pyo3(signature = (seed, init_std=None))]
    fn initialize(&mut self, seed: u64, init_std: Option<f64>) {
        let std = init_std.unwrap_or(TrainConfig::default().init_std);
        self.inner = self.inner.clone().initialize(seed, std);
    }

    #[getter]
    fn n_parameters(&self) -> usize {
        self.inner.n_parameters()
    }

    #[getter]
    fn feature_len(&self) -> usize {
        self.inner.feature_len()
    }

    fn parameters(&self) -> Vec<Vec<f64>> {
        self.inner
            .parameters()
            .into_iter()
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `(flatten features, logits)` for a batch of windows.
    #[allow(clippy::type_complexity)]
    fn forward(&self, batch: Vec<Vec<Vec<f64>>>) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let x = to_batch(batch)?;
        let (f, l) = self.inner.forward(x.view()).map_err(py_err)?;
        let rows = |a: ndarray::Array2<f64>| a.rows().into_iter().map(|r| r.to_vec()).collect();
        Ok((rows(f), rows(l)))
    }

    /// Balance, whiten and train in place; returns per-epoch mean loss.
    #[pyo3(signature = (windows, seed=0, epochs=None, learning_rate=None, batch_size=None))]
    fn fit(
        &mut self,
        windows: &PyWindows,
        seed: u64,
        epochs: Option<usize>,
        learning_rate: Option<f64>,
        batch_size: Option<usize>,
    ) -> PyResult<Vec<f64>> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            epochs: epochs.unwrap_or(d.epochs),
            learning_rate: learning_rate.unwrap_or(d.learning_rate),
            batch_size: batch_size.unwrap_or(d.batch_size),
            seed,
            ..d
        };
        let (balanced, _, whitened) = harness::prepare_training_set(
            &windows.inner,
            split(seed, &[stream::BALANCE]),
            harness::PIPELINE_ZCA_EPSILON,
        )
        .map_err(py_err)?;
        let (model, history) =
            nn::train(self.inner.clone(), &whitened, &balanced.y, &cfg).map_err(py_err)?;
        self.inner = model;
        Ok(history)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        data_io::save_model(&self.inner, &path).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCnnModel {
            inner: data_io::load_model(&path).map_err(py_err)?,
        })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Leave-one-subject-out evaluation; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (kind, windows, repetitions=15, seed=0, epochs=None, source=None, source_model=None, jobs=1))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    kind: &str,
    windows: &PyWindows,
    repetitions: usize,
    seed: u64,
    epochs: Option<usize>,
    source: Option<&PyWindows>,
    source_model: Option<&PyCnnModel>,
    jobs: usize,
) -> PyResult<String> {
    let kind = ExperimentKind::parse(kind)
        .ok_or_else(|| PyValueError::new_err(format!("unknown experiment `{kind}`")))?;
    let mut spec = ExperimentSpec::new(kind);
    spec.repetitions = repetitions;
    spec.base_seed = seed;
    spec.train.seed = seed;
    if let Some(e) = epochs {
        spec.train.epochs = e;
    }
    let transfer = match (source, source_model) {
        (Some(_), Some(_)) => {
            return Err(PyValueError::new_err(
                "give only one of source and source_model",
            ))
        }
        (Some(w), None) => Some(TransferSource::Data(w.inner.clone())),
        (None, Some(m)) => Some(TransferSource::Model(m.inner.clone())),
        (None, None) => None,
    };
    if transfer.is_some() {
        spec.source = Some(SourceSpec::default());
    }
    let report =
        harness::run_experiment(&spec, &windows.inner, transfer.as_ref(), jobs).map_err(py_err)?;
    Ok(report.to_json())
}

#[pymodule(name = "smm_detect")]
fn smm_detect_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRecording>()?;
    m.add_class::<PyWindows>()?;
    m.add_class::<PyCnnModel>()?;
    m.add_function(wrap_pyfunction!(synth_generate, m)?)?;
    m.add_function(wrap_pyfunction!(load_recordings, m)?)?;
    m.add_function(wrap_pyfunction!(write_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(resample_linear, m)?)?;
    m.add_function(wrap_pyfunction!(highpass_filter, m)?)?;
    m.add_function(wrap_pyfunction!(stockwell_transform, m)?)?;
    m.add_function(wrap_pyfunction!(f1_score, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
