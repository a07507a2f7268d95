use crate::error::{Error, Result};
use crate::signal::{WindowedDataset, SMM};

/// F1 with SMM (+1) as the positive class; 0 when precision + recall is 0.
pub fn f1_score(y_true: &[i8], y_pred: &[i8]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::validation(format!(
            "f1: {} labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == SMM, p == SMM) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fneg) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// One leave-one-subject-out fold.
#[derive(Clone, Debug, PartialEq)]
pub struct Fold {
    pub subject: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per subject (first-appearance order): that subject's windows
/// are the test set, everyone else's the training set.
pub fn loso_split(ds: &WindowedDataset) -> Result<Vec<Fold>> {
    let subjects = ds.subjects();
    if subjects.len() < 2 {
        return Err(Error::validation(format!(
            "loso: need at least 2 subjects, found {}",
            subjects.len()
        )));
    }
    Ok(subjects
        .into_iter()
        .map(|subject| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..ds.len()).partition(|&i| ds.subject_ids[i] == subject);
            Fold {
                subject,
                train,
                test,
            }
        })
        .collect())
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn f1_rules() {
        assert_eq!(f1_score(&[1, -1, 1], &[1, -1, 1]).unwrap(), 1.0);
        let f = f1_score(&[1, -1], &[1, 1]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&[1, 1, -1], &[-1, -1, -1]).unwrap(), 0.0);
        assert_eq!(f1_score(&[-1, -1], &[1, -1]).unwrap(), 0.0);
        assert_eq!(f1_score(&[-1, -1], &[-1, -1]).unwrap(), 0.0);
        assert!(f1_score(&[1], &[1, 1]).is_err());
    }

    fn ds(subjects: &[&str]) -> WindowedDataset {
        let n = subjects.len();
        WindowedDataset {
            x: Array3::zeros((n, 1, 2)),
            y: vec![1; n],
            subject_ids: subjects.iter().map(|s| s.to_string()).collect(),
            origins: (0..n)
                .map(|i| crate::signal::WindowOrigin {
                    recording: "r".into(),
                    start: i,
                })
                .collect(),
        }
    }

    #[test]
    fn two_subject_folds() {
        let folds = loso_split(&ds(&["A", "A", "B"])).unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(
            (
                folds[0].subject.as_str(),
                folds[0].train.clone(),
                folds[0].test.clone()
            ),
            ("A", vec![2], vec![0, 1])
        );
        assert_eq!(
            (
                folds[1].subject.as_str(),
                folds[1].train.clone(),
                folds[1].test.clone()
            ),
            ("B", vec![0, 1], vec![2])
        );
    }

    #[test]
    fn six_subjects_partition() {
        let ids: Vec<String> = (0..30).map(|i| format!("S{}", i % 6 + 1)).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let d = ds(&refs);
        let folds = loso_split(&d).unwrap();
        assert_eq!(folds.len(), 6);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
        for f in &folds {
            assert!(f.train.iter().all(|&i| d.subject_ids[i] != f.subject));
            assert_eq!(f.train.len() + f.test.len(), 30);
        }
    }

    #[test]
    fn single_subject_rejected() {
        assert!(loso_split(&ds(&["A", "A"])).is_err());
    }
}
