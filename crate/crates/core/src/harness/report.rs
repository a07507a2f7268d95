use std::fs;
use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentKind, ExperimentSpec};
use super::metrics::{mean_std, Fold};
use super::pca::pca_project;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Outcome of one (repetition, fold) job.
#[derive(Clone, Debug, PartialEq)]
pub struct JobResult {
    pub repetition: usize,
    pub subject: String,
    pub f1: f64,
    pub final_train_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectScore {
    pub subject: String,
    pub mean_f1: f64,
    /// Population standard deviation over repetitions.
    pub std_f1: f64,
    /// F1 of each repetition, in repetition order.
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub subjects: Vec<SubjectScore>,
    /// Mean over subjects of the per-subject mean F1.
    pub grand_mean_f1: f64,
    /// Mean final training loss per repetition (CNN kinds only).
    pub final_train_loss: Option<Vec<f64>>,
    pub config: ExperimentSpec,
}

/// Mean and std that do not depend on the order of `values`; identical
/// values give exactly that value and zero spread.
fn order_free_stats(values: &[f64]) -> (f64, f64) {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return (values.first().copied().unwrap_or(0.0), 0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    mean_std(&sorted)
}

impl EvalReport {
    pub fn from_jobs(spec: &ExperimentSpec, folds: &[Fold], jobs: Vec<JobResult>) -> Result<Self> {
        let reps = spec.repetitions;
        let mut subjects = Vec::with_capacity(folds.len());
        for fold in folds {
            let mut scores = vec![f64::NAN; reps];
            for j in jobs.iter().filter(|j| j.subject == fold.subject) {
                scores[j.repetition] = j.f1;
            }
            if scores.iter().any(|s| s.is_nan()) {
                return Err(Error::validation(format!(
                    "report: missing jobs for subject {}",
                    fold.subject
                )));
            }
            let (mean_f1, std_f1) = order_free_stats(&scores);
            subjects.push(SubjectScore {
                subject: fold.subject.clone(),
                mean_f1,
                std_f1,
                scores,
            });
        }
        let means: Vec<f64> = subjects.iter().map(|s| s.mean_f1).collect();
        let final_train_loss = if spec.kind.uses_cnn() {
            Some(
                (0..reps)
                    .map(|r| {
                        let losses: Vec<f64> = jobs
                            .iter()
                            .filter(|j| j.repetition == r)
                            .filter_map(|j| j.final_train_loss)
                            .collect();
                        mean_std(&losses).0
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: spec.kind,
            grand_mean_f1: mean_std(&means).0,
            subjects,
            final_train_loss,
            config: spec.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: EvalReport = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("malformed report: {e}")))?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion {
                found: report.schema_version,
                supported: REPORT_SCHEMA_VERSION,
            });
        }
        Ok(report)
    }
}

/// Subject × experiment table of mean F1, followed by a `mean` row of
/// grand means. Subjects appear in first-report order.
pub fn summary_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("subject");
    for r in reports {
        out.push(',');
        out.push_str(r.experiment.as_str());
    }
    out.push('\n');
    let mut subjects: Vec<&str> = Vec::new();
    for r in reports {
        for s in &r.subjects {
            if !subjects.contains(&s.subject.as_str()) {
                subjects.push(&s.subject);
            }
        }
    }
    for subject in subjects {
        out.push_str(subject);
        for r in reports {
            out.push(',');
            if let Some(s) = r.subjects.iter().find(|s| s.subject == subject) {
                out.push_str(&format!("{:.4}", s.mean_f1));
            }
        }
        out.push('\n');
    }
    out.push_str("mean");
    for r in reports {
        out.push_str(&format!(",{:.4}", r.grand_mean_f1));
    }
    out.push('\n');
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write the full JSON report.
pub fn export_report(report: &EvalReport, path: &Path) -> Result<()> {
    write(path, &report.to_json())
}

pub fn export_summary(reports: &[EvalReport], path: &Path) -> Result<()> {
    write(path, &summary_csv(reports))
}

/// First two principal components of `features` with the window labels,
/// as CSV columns `pc1,pc2,label`.
pub fn export_pca(features: ArrayView2<'_, f64>, labels: &[i8], path: &Path) -> Result<()> {
    if features.nrows() != labels.len() {
        return Err(Error::validation(format!(
            "pca: {} feature rows vs {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    let p = pca_project(features, 2)?;
    let mut out = String::from("pc1,pc2,label\n");
    for (row, y) in p.rows().into_iter().zip(labels) {
        out.push_str(&format!("{},{},{}\n", row[0], row[1], y));
    }
    write(path, &out)
}
