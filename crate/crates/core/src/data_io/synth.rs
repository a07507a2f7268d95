//! Synthetic multi-subject accelerometer studies.
//!
//! Every subject wears three sensors; each axis carries Gaussian noise. SMM
//! episodes are sinusoidal bursts added to a subject-specific subset of
//! sensors (torso for rocking, wrists for flapping, or both, cycling over
//! subjects). Burst frequency is drawn per subject from the study-wide
//! range and amplitude perturbed per subject; individual bursts jitter the
//! frequency slightly. Annotations cover the burst intervals exactly.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::recording::{Annotation, Label, RawRecording, StudyId};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, split, Rng};

const SENSORS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub study_id: StudyId,
    pub n_subjects: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Mean number of bursts per minute.
    pub smm_burst_rate: f64,
    pub burst_freq_range_hz: (f64, f64),
    pub burst_duration_range_s: (f64, f64),
    pub burst_amplitude: f64,
    pub noise_std: f64,
    /// Fractional per-subject perturbation of burst frequency and amplitude.
    pub per_subject_jitter: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            study_id: StudyId::Study1,
            n_subjects: 6,
            duration_s: 300.0,
            sample_rate_hz: 90.0,
            smm_burst_rate: 3.0,
            burst_freq_range_hz: (1.0, 3.0),
            burst_duration_range_s: (4.0, 10.0),
            burst_amplitude: 1.0,
            noise_std: 0.2,
            per_subject_jitter: 0.1,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!(
                    "synth: {name} must be positive, got {v}"
                )))
            }
        };
        if self.n_subjects == 0 {
            return Err(Error::validation("synth: n_subjects must be at least 1"));
        }
        positive("duration_s", self.duration_s)?;
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("burst_amplitude", self.burst_amplitude)?;
        positive("noise_std", self.noise_std)?;
        if !(self.smm_burst_rate.is_finite() && self.smm_burst_rate >= 0.0) {
            return Err(Error::validation(
                "synth: smm_burst_rate must be non-negative",
            ));
        }
        if !(self.per_subject_jitter.is_finite() && (0.0..1.0).contains(&self.per_subject_jitter)) {
            return Err(Error::validation(
                "synth: per_subject_jitter must be in [0, 1)",
            ));
        }
        let (lo, hi) = self.burst_freq_range_hz;
        let nyquist = self.sample_rate_hz / 2.0;
        if !(lo > 0.0 && lo <= hi && hi * (1.0 + self.per_subject_jitter) < nyquist) {
            return Err(Error::validation(format!(
                "synth: burst frequency range ({lo}, {hi}) must lie within (0, {nyquist}) after jitter"
            )));
        }
        let (dlo, dhi) = self.burst_duration_range_s;
        if !(dlo > 0.0 && dlo <= dhi && dhi.is_finite()) {
            return Err(Error::validation(format!(
                "synth: burst duration range ({dlo}, {dhi}) is invalid"
            )));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Long-run fraction of time spent in bursts (renewal-process mean,
    /// ignoring edge truncation at the end of a recording).
    pub fn expected_smm_fraction(&self) -> f64 {
        if self.smm_burst_rate == 0.0 {
            return 0.0;
        }
        let mean_burst = 0.5 * (self.burst_duration_range_s.0 + self.burst_duration_range_s.1);
        let mean_gap = 60.0 / self.smm_burst_rate;
        mean_burst / (mean_burst + mean_gap)
    }
}

/// Which sensors a subject's stereotypy shows up on.
#[derive(Clone, Copy, Debug)]
enum Movement {
    Rocking,
    Flapping,
    Both,
}

impl Movement {
    fn active(self, sensor: usize) -> bool {
        match self {
            Movement::Rocking => sensor == 0,
            Movement::Flapping => sensor != 0,
            Movement::Both => true,
        }
    }
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<Vec<RawRecording>> {
    cfg.validate()?;
    (0..cfg.n_subjects)
        .map(|i| generate_subject(cfg, i, &mut rng_from_seed(split(cfg.seed, &[i as u64]))))
        .collect()
}

fn jittered(rng: &mut Rng, value: f64, jitter: f64) -> f64 {
    value * (1.0 + jitter * rng.random_range(-1.0..=1.0))
}

fn generate_subject(cfg: &SynthConfig, index: usize, rng: &mut Rng) -> Result<RawRecording> {
    let n_t = cfg.n_samples();
    let rate = cfg.sample_rate_hz;
    let (flo, fhi) = cfg.burst_freq_range_hz;

    let drawn = rng.random_range(flo..=fhi);
    let base_freq = jittered(rng, drawn, cfg.per_subject_jitter);
    let amplitude = jittered(rng, cfg.burst_amplitude, cfg.per_subject_jitter);
    // Cycling the movement type keeps every type in every LOSO training
    // fold once there are at least six subjects.
    let movement = match index % 3 {
        0 => Movement::Rocking,
        1 => Movement::Flapping,
        _ => Movement::Both,
    };
    let active: Vec<bool> = (0..3 * SENSORS).map(|c| movement.active(c / 3)).collect();

    let noise = Normal::new(0.0, cfg.noise_std).expect("validated noise_std");
    let mut channels: Vec<Vec<f64>> = (0..3 * SENSORS)
        .map(|_| (0..n_t).map(|_| noise.sample(rng)).collect())
        .collect();

    let mut annotations = Vec::new();
    if cfg.smm_burst_rate > 0.0 {
        let gap = Exp::new(cfg.smm_burst_rate / 60.0).expect("positive burst rate");
        let (dlo, dhi) = cfg.burst_duration_range_s;
        let mut t = 0.0;
        loop {
            let start_s = t + gap.sample(rng);
            let dur_s = rng.random_range(dlo..=dhi);
            let freq = jittered(rng, base_freq, 0.5 * cfg.per_subject_jitter);
            let phases: Vec<f64> = (0..3 * SENSORS)
                .map(|_| rng.random_range(0.0..2.0 * PI))
                .collect();
            let start = (start_s * rate).round() as usize;
            let end = ((start_s + dur_s) * rate).round() as usize;
            if end > n_t {
                break;
            }
            for (c, ch) in channels.iter_mut().enumerate() {
                if !active[c] {
                    continue;
                }
                let a = amplitude;
                for (k, v) in ch[start..end].iter_mut().enumerate() {
                    *v += a * (2.0 * PI * freq * k as f64 / rate + phases[c]).sin();
                }
            }
            annotations.push(Annotation {
                start,
                end,
                label: Label::Smm,
            });
            t = start_s + dur_s;
        }
    }

    let sensors = super::recording::channels_to_sensors(&channels)?;
    RawRecording::new(
        format!("S{}", index + 1),
        cfg.study_id,
        rate,
        sensors,
        annotations,
    )
}
