use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StudyId {
    Study1,
    Study2,
}

impl StudyId {
    /// Case-insensitive `study1` / `study2`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "study1" => Some(StudyId::Study1),
            "study2" => Some(StudyId::Study2),
            _ => None,
        }
    }
}

impl fmt::Display for StudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StudyId::Study1 => f.write_str("Study1"),
            StudyId::Study2 => f.write_str("Study2"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "SMM")]
    Smm,
    #[serde(rename = "NoSMM")]
    NoSmm,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Smm => "SMM",
            Label::NoSmm => "NoSMM",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "SMM" => Some(Label::Smm),
            "NoSMM" => Some(Label::NoSmm),
            _ => None,
        }
    }
}

/// Half-open sample interval `[start, end)` with a behaviour label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

/// One accelerometer: a sequence of (x, y, z) samples.
pub type SensorStream = Vec<[f64; 3]>;

/// One subject/session of multi-sensor accelerometer data.
///
/// Sensor order is fixed by the producer (torso, left wrist, right wrist
/// by convention) and becomes the channel order after segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecording {
    pub subject_id: String,
    pub study_id: StudyId,
    pub sample_rate_hz: f64,
    sensors: Vec<SensorStream>,
    annotations: Vec<Annotation>,
}

impl RawRecording {
    pub fn new(
        subject_id: impl Into<String>,
        study_id: StudyId,
        sample_rate_hz: f64,
        sensors: Vec<SensorStream>,
        mut annotations: Vec<Annotation>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::validation(format!(
                "recording {subject_id}: sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if sensors.is_empty() {
            return Err(Error::validation(format!(
                "recording {subject_id}: at least one sensor required"
            )));
        }
        let n_t = sensors[0].len();
        if let Some((i, s)) = sensors.iter().enumerate().find(|(_, s)| s.len() != n_t) {
            return Err(Error::validation(format!(
                "recording {subject_id}: length mismatch, sensor 0 has {n_t} samples but sensor {i} has {}",
                s.len()
            )));
        }
        annotations.sort_by_key(|a| (a.start, a.end));
        validate_annotations(&subject_id, &annotations, n_t)?;
        Ok(RawRecording {
            subject_id,
            study_id,
            sample_rate_hz,
            sensors,
            annotations,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sensors[0].len()
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn n_channels(&self) -> usize {
        3 * self.sensors.len()
    }

    pub fn sensors(&self) -> &[SensorStream] {
        &self.sensors
    }

    /// Annotations sorted by start index.
    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Channel `c` in sensor-major, axis-minor order.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        let (sensor, axis) = (c / 3, c % 3);
        self.sensors[sensor].iter().map(|s| s[axis]).collect()
    }

    /// All channels, sensor-major, axis-minor.
    pub fn channels(&self) -> Vec<Vec<f64>> {
        (0..self.n_channels()).map(|c| self.channel(c)).collect()
    }

    /// Rebuild a recording from per-channel data, keeping identity fields.
    pub fn with_channels(
        &self,
        channels: &[Vec<f64>],
        sample_rate_hz: f64,
        annotations: Vec<Annotation>,
    ) -> Result<Self> {
        if channels.len() != self.n_channels() {
            return Err(Error::validation(format!(
                "recording {}: expected {} channels, got {}",
                self.subject_id,
                self.n_channels(),
                channels.len()
            )));
        }
        let sensors = channels_to_sensors(channels)?;
        RawRecording::new(
            self.subject_id.clone(),
            self.study_id,
            sample_rate_hz,
            sensors,
            annotations,
        )
    }

    /// Per-sample SMM indicator.
    pub fn smm_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_samples()];
        for a in self.annotations.iter().filter(|a| a.label == Label::Smm) {
            mask[a.start..a.end].iter_mut().for_each(|m| *m = true);
        }
        mask
    }
}

pub(crate) fn channels_to_sensors(channels: &[Vec<f64>]) -> Result<Vec<SensorStream>> {
    if !channels.len().is_multiple_of(3) || channels.is_empty() {
        return Err(Error::validation(format!(
            "channel count {} is not a positive multiple of 3",
            channels.len()
        )));
    }
    Ok(channels
        .chunks(3)
        .map(|axes| {
            let n = axes.iter().map(Vec::len).min().unwrap_or(0);
            (0..n)
                .map(|t| [axes[0][t], axes[1][t], axes[2][t]])
                .collect()
        })
        .collect())
}

/// Expects `annotations` sorted by start.
fn validate_annotations(subject: &str, annotations: &[Annotation], n_t: usize) -> Result<()> {
    for (i, a) in annotations.iter().enumerate() {
        if a.start >= a.end || a.end > n_t {
            return Err(Error::validation(format!(
                "recording {subject}: malformed annotation #{i} ({}, {}) for {n_t} samples",
                a.start, a.end
            )));
        }
    }
    for (i, w) in annotations.windows(2).enumerate() {
        if w[1].start < w[0].end {
            return Err(Error::validation(format!(
                "recording {subject}: overlapping intervals #{i} ({}, {}) and #{} ({}, {})",
                w[0].start,
                w[0].end,
                i + 1,
                w[1].start,
                w[1].end
            )));
        }
    }
    Ok(())
}
