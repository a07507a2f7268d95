use ndarray::{s, Array3, Axis};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::filter::HighPass;
use super::resample::{resample_linear, resampled_len};
use crate::data_io::{Annotation, RawRecording};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const SMM: i8 = 1;
pub const NO_SMM: i8 = -1;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowOrigin {
    pub recording: String,
    pub start: usize,
}

/// Model-ready windows: `x` is `n × channels × window_len`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    pub x: Array3<f64>,
    pub y: Vec<i8>,
    pub subject_ids: Vec<String>,
    pub origins: Vec<WindowOrigin>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.x.dim().1
    }

    pub fn window_len(&self) -> usize {
        self.x.dim().2
    }

    /// `(smm, no_smm)` window counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let smm = self.y.iter().filter(|&&l| l == SMM).count();
        (smm, self.len() - smm)
    }

    /// Distinct subjects in first-appearance order.
    pub fn subjects(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for s in &self.subject_ids {
            if !seen.contains(s) {
                seen.push(s.clone());
            }
        }
        seen
    }

    pub fn select(&self, indices: &[usize]) -> WindowedDataset {
        WindowedDataset {
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            subject_ids: indices
                .iter()
                .map(|&i| self.subject_ids[i].clone())
                .collect(),
            origins: indices.iter().map(|&i| self.origins[i].clone()).collect(),
        }
    }

    pub fn concat(parts: &[WindowedDataset]) -> Result<WindowedDataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::validation("cannot concatenate zero datasets"))?;
        let (_, c, d) = first.x.dim();
        if let Some(p) = parts.iter().find(|p| p.x.dim().1 != c || p.x.dim().2 != d) {
            return Err(Error::validation(format!(
                "window shape mismatch: {c}×{d} vs {}×{}",
                p.x.dim().1,
                p.x.dim().2
            )));
        }
        let views: Vec<_> = parts.iter().map(|p| p.x.view()).collect();
        Ok(WindowedDataset {
            x: ndarray::concatenate(Axis(0), &views).expect("shapes checked"),
            y: parts.iter().flat_map(|p| p.y.iter().copied()).collect(),
            subject_ids: parts
                .iter()
                .flat_map(|p| p.subject_ids.iter().cloned())
                .collect(),
            origins: parts
                .iter()
                .flat_map(|p| p.origins.iter().cloned())
                .collect(),
        })
    }

    /// Each window collapsed to one row of length `channels · window_len`.
    pub fn flattened(&self) -> ndarray::Array2<f64> {
        let (n, c, d) = self.x.dim();
        self.x
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((n, c * d))
            .expect("contiguous")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub target_rate_hz: f64,
    pub highpass_cutoff_hz: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            target_rate_hz: 90.0,
            highpass_cutoff_hz: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_len: usize,
    pub step: usize,
    pub smm_fraction_threshold: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_len: 90,
            step: 10,
            smm_fraction_threshold: 0.5,
        }
    }
}

impl WindowConfig {
    /// Fraction of samples shared by consecutive windows.
    pub fn overlap(&self) -> f64 {
        self.window_len.saturating_sub(self.step) as f64 / self.window_len as f64
    }

    pub fn n_windows(&self, n_t: usize) -> usize {
        if n_t < self.window_len {
            0
        } else {
            (n_t - self.window_len) / self.step + 1
        }
    }
}

fn rescale_index(i: usize, ratio: f64) -> usize {
    (i as f64 * ratio - 1e-9).ceil().max(0.0) as usize
}

/// Resample every channel to the target rate (rescaling annotation indices)
/// and remove the DC component with the first-order high-pass filter.
pub fn preprocess(rec: &RawRecording, cfg: &PreprocessConfig) -> Result<RawRecording> {
    let from = rec.sample_rate_hz;
    let to = cfg.target_rate_hz;
    let hp = HighPass::design(cfg.highpass_cutoff_hz, to)?;
    let mut annotations = rec.annotations().to_vec();
    let mut channels = rec.channels();
    if from != to {
        let n_out = resampled_len(rec.n_samples(), from, to);
        let ratio = to / from;
        annotations = annotations
            .into_iter()
            .map(|a| Annotation {
                start: rescale_index(a.start, ratio).min(n_out),
                end: rescale_index(a.end, ratio).min(n_out),
                label: a.label,
            })
            .filter(|a| a.start < a.end)
            .collect();
        channels = channels
            .iter()
            .map(|c| resample_linear(c, from, to))
            .collect::<Result<_>>()?;
    }
    let filtered: Vec<Vec<f64>> = channels.iter().map(|c| hp.apply(c)).collect();
    rec.with_channels(&filtered, to, annotations)
}

/// Slide a `window_len` window in steps of `step`; label +1 when at least
/// `smm_fraction_threshold` of its samples are annotated SMM.
pub fn segment_windows(rec: &RawRecording, cfg: &WindowConfig) -> Result<WindowedDataset> {
    if cfg.window_len == 0 || cfg.step == 0 {
        return Err(Error::validation(
            "segment: window length and step must be positive",
        ));
    }
    let n_t = rec.n_samples();
    if n_t < cfg.window_len {
        return Err(Error::validation(format!(
            "segment: recording {} has {n_t} samples, shorter than one window of {}",
            rec.subject_id, cfg.window_len
        )));
    }
    let n = cfg.n_windows(n_t);
    let c = rec.n_channels();
    let d = cfg.window_len;
    let channels = rec.channels();
    let mut smm_prefix = vec![0usize; n_t + 1];
    for (t, &m) in rec.smm_mask().iter().enumerate() {
        smm_prefix[t + 1] = smm_prefix[t] + usize::from(m);
    }
    let recording = format!("{}/{}", rec.study_id, rec.subject_id);
    let mut x = Array3::zeros((n, c, d));
    let mut y = Vec::with_capacity(n);
    let mut origins = Vec::with_capacity(n);
    for w in 0..n {
        let start = w * cfg.step;
        for (ch, data) in channels.iter().enumerate() {
            x.slice_mut(s![w, ch, ..])
                .assign(&ndarray::ArrayView1::from(&data[start..start + d]));
        }
        let frac = (smm_prefix[start + d] - smm_prefix[start]) as f64 / d as f64;
        y.push(if frac >= cfg.smm_fraction_threshold {
            SMM
        } else {
            NO_SMM
        });
        origins.push(WindowOrigin {
            recording: recording.clone(),
            start,
        });
    }
    Ok(WindowedDataset {
        x,
        y,
        subject_ids: vec![rec.subject_id.clone(); n],
        origins,
    })
}

/// Preprocess and segment every recording, concatenated in input order.
pub fn windows_from_recordings(
    recordings: &[RawRecording],
    pre: &PreprocessConfig,
    win: &WindowConfig,
) -> Result<WindowedDataset> {
    let parts = recordings
        .iter()
        .map(|r| segment_windows(&preprocess(r, pre)?, win))
        .collect::<Result<Vec<_>>>()?;
    WindowedDataset::concat(&parts)
}

/// Indices (ascending) that keep every minority window and a uniform random
/// subset of the majority class of equal size.
pub fn balance_indices(y: &[i8], seed: u64) -> Result<Vec<usize>> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == SMM).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] != SMM).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::validation(format!(
            "balance: both classes required (SMM {}, no-SMM {})",
            pos.len(),
            neg.len()
        )));
    }
    let (minority, majority) = if pos.len() <= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let mut rng = rng_from_seed(seed);
    let mut keep: Vec<usize> = index::sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .chain(minority)
        .collect();
    keep.sort_unstable();
    Ok(keep)
}

pub fn balance_classes(ds: &WindowedDataset, seed: u64) -> Result<WindowedDataset> {
    Ok(ds.select(&balance_indices(&ds.y, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{Label, StudyId};

    fn recording(n_t: usize, ann: Vec<Annotation>) -> RawRecording {
        let sensor: Vec<[f64; 3]> = (0..n_t).map(|t| [t as f64, -(t as f64), 0.5]).collect();
        RawRecording::new(
            "S1",
            StudyId::Study2,
            90.0,
            vec![sensor.clone(), sensor.clone(), sensor],
            ann,
        )
        .unwrap()
    }

    #[test]
    fn window_count_and_overlap() {
        let ds = segment_windows(&recording(990, vec![]), &WindowConfig::default()).unwrap();
        assert_eq!(ds.len(), 91);
        assert_eq!(ds.x.dim(), (91, 9, 90));
        assert_eq!(ds.origins[1].start - ds.origins[0].start, 10);
        assert!((WindowConfig::default().overlap() - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn windows_are_contiguous_slices_sensor_major() {
        let rec = recording(300, vec![]);
        let ds = segment_windows(&rec, &WindowConfig::default()).unwrap();
        let chans = rec.channels();
        for (w, o) in ds.origins.iter().enumerate() {
            for ch in 0..9 {
                for t in 0..90 {
                    assert_eq!(ds.x[[w, ch, t]], chans[ch][o.start + t]);
                }
            }
        }
        assert_eq!(ds.x[[0, 1, 5]], -5.0);
        assert_eq!(ds.x[[0, 2, 5]], 0.5);
    }

    #[test]
    fn half_annotated_window_is_smm() {
        let ann = vec![Annotation {
            start: 45,
            end: 135,
            label: Label::Smm,
        }];
        let ds = segment_windows(&recording(180, ann), &WindowConfig::default()).unwrap();
        // window 0 covers [0,90): exactly 45 annotated samples
        assert_eq!(ds.y[0], SMM);
        let ann = vec![Annotation {
            start: 46,
            end: 135,
            label: Label::Smm,
        }];
        let ds = segment_windows(&recording(180, ann), &WindowConfig::default()).unwrap();
        assert_eq!(ds.y[0], NO_SMM);
    }

    #[test]
    fn short_recording_rejected() {
        assert!(segment_windows(&recording(89, vec![]), &WindowConfig::default()).is_err());
    }

    fn labels(smm: usize, no: usize) -> Vec<i8> {
        let mut y = vec![SMM; smm];
        y.extend(vec![NO_SMM; no]);
        y
    }

    #[test]
    fn balancing_downsamples_majority() {
        let y = labels(100, 400);
        let keep = balance_indices(&y, 3).unwrap();
        let smm = keep.iter().filter(|&&i| y[i] == SMM).count();
        assert_eq!((smm, keep.len() - smm), (100, 100));
        assert!(keep.windows(2).all(|w| w[0] < w[1]));
        assert!(keep[..100].iter().eq((0..100).collect::<Vec<_>>().iter()));
        assert_eq!(keep, balance_indices(&y, 3).unwrap());
        assert_ne!(keep, balance_indices(&y, 4).unwrap());
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let y = labels(50, 50);
        assert_eq!(
            balance_indices(&y, 1).unwrap(),
            (0..100).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_class_cannot_be_balanced() {
        assert!(balance_indices(&labels(0, 10), 1).is_err());
        assert!(balance_indices(&labels(10, 0), 1).is_err());
    }

    #[test]
    fn preprocess_rescales_annotations_and_rate() {
        let n = 600;
        let sensor: Vec<[f64; 3]> = (0..n).map(|_| [1.0, 1.0, 1.0]).collect();
        let ann = vec![Annotation {
            start: 60,
            end: 120,
            label: Label::Smm,
        }];
        let rec = RawRecording::new("S1", StudyId::Study1, 60.0, vec![sensor], ann).unwrap();
        let out = preprocess(&rec, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.sample_rate_hz, 90.0);
        assert_eq!(out.n_samples(), 899);
        assert_eq!(out.annotations()[0].start, 90);
        assert_eq!(out.annotations()[0].end, 180);
    }
}
