use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{f1_score, loso_split};
use super::report::{EvalReport, JobResult};
use crate::data_io::StudyId;
use crate::error::{Error, Result};
use crate::features::{extract_baseline_features, DEFAULT_BAND_EDGES_HZ};
use crate::nn::{init_model, train, transfer_init, CnnModel, TrainConfig};
use crate::rng::{split, stream};
use crate::signal::{
    apply_zca, balance_indices, fit_zca, PreprocessConfig, WindowConfig, WindowedDataset,
    ZcaTransform,
};
use crate::svm::{SvmConfig, SvmModel};

/// ZCA regularizer used by the experiment pipeline. Much larger than the
/// transform's own default: on long, noise-dominated windows a tiny epsilon
/// blows the noise floor up to the same scale as the burst subspace.
pub const PIPELINE_ZCA_EPSILON: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Raw,
    Handcrafted,
    Cnn,
    #[serde(rename = "transfer")]
    TransferredCnn,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Raw,
        ExperimentKind::Handcrafted,
        ExperimentKind::Cnn,
        ExperimentKind::TransferredCnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Raw => "raw",
            ExperimentKind::Handcrafted => "handcrafted",
            ExperimentKind::Cnn => "cnn",
            ExperimentKind::TransferredCnn => "transfer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Raw and Handcrafted involve no per-repetition randomness.
    pub fn is_deterministic(self) -> bool {
        matches!(self, ExperimentKind::Raw | ExperimentKind::Handcrafted)
    }

    pub fn uses_cnn(self) -> bool {
        !self.is_deterministic()
    }
}

/// Where the transferred model comes from, echoed into the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub study: Option<StudyId>,
    pub manifest: Option<String>,
    pub model_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub target_study: Option<StudyId>,
    pub target_manifest: Option<String>,
    pub source: Option<SourceSpec>,
    pub train: TrainConfig,
    /// The seed field is ignored; each job derives its own.
    pub svm: SvmConfig,
    pub repetitions: usize,
    pub base_seed: u64,
    pub zca_epsilon: f64,
    /// How the windows were produced; the handcrafted path reads the rate.
    pub preprocess: PreprocessConfig,
    pub window: WindowConfig,
    pub band_edges_hz: Vec<f64>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            target_study: None,
            target_manifest: None,
            source: None,
            train: TrainConfig::default(),
            svm: SvmConfig::default(),
            repetitions: 15,
            base_seed: 0,
            zca_epsilon: PIPELINE_ZCA_EPSILON,
            preprocess: PreprocessConfig::default(),
            window: WindowConfig::default(),
            band_edges_hz: DEFAULT_BAND_EDGES_HZ.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::validation(
                "experiment: repetitions must be at least 1",
            ));
        }
        if self.kind == ExperimentKind::TransferredCnn && self.source.is_none() {
            return Err(Error::validation(
                "experiment: transfer needs a source study or a source model file",
            ));
        }
        if !(self.zca_epsilon.is_finite() && self.zca_epsilon >= 0.0) {
            return Err(Error::validation(
                "experiment: zca_epsilon must be non-negative",
            ));
        }
        self.train.validate()
    }
}

/// Source material for [`ExperimentKind::TransferredCnn`].
#[derive(Clone, Debug)]
pub enum TransferSource {
    /// Windows of the source study; a model is trained on all of them once
    /// per repetition.
    Data(WindowedDataset),
    /// A ready-trained model shared by every repetition.
    Model(CnnModel),
}

/// Everything fitted on one training fold. Built from training windows only.
#[derive(Clone, Debug)]
pub struct FoldFit {
    pub kind: ExperimentKind,
    pub zca: Option<ZcaTransform>,
    pub cnn: Option<CnnModel>,
    pub svm: SvmModel,
    pub loss_history: Vec<f64>,
    /// Size of the balanced training set.
    pub n_train: usize,
}

/// Seeds of one (repetition, fold) job.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JobSeeds {
    pub balance: u64,
    pub train: u64,
    pub svm: u64,
}

impl JobSeeds {
    pub fn new(base_seed: u64, repetition: usize, fold: usize) -> Self {
        let job = split(base_seed, &[repetition as u64, fold as u64]);
        JobSeeds {
            balance: split(job, &[stream::BALANCE]),
            train: job,
            svm: split(job, &[stream::SVM]),
        }
    }
}

/// Balance, then fit the ZCA transform on the balanced set.
pub fn prepare_training_set(
    train: &WindowedDataset,
    balance_seed: u64,
    zca_epsilon: f64,
) -> Result<(WindowedDataset, ZcaTransform, Array3<f64>)> {
    let balanced = train.select(&balance_indices(&train.y, balance_seed)?);
    let zca = fit_zca(balanced.x.view(), zca_epsilon)?;
    let whitened = apply_zca(&zca, balanced.x.view())?;
    Ok((balanced, zca, whitened))
}

/// Train a model on a whole (source) study, as used for transfer.
pub fn train_source_model(
    source: &WindowedDataset,
    spec: &ExperimentSpec,
    repetition: usize,
) -> Result<CnnModel> {
    let seed = split(spec.base_seed, &[repetition as u64, stream::SOURCE]);
    let (balanced, _, whitened) =
        prepare_training_set(source, split(seed, &[stream::BALANCE]), spec.zca_epsilon)?;
    let cfg = TrainConfig {
        seed,
        ..spec.train.clone()
    };
    let mut model = init_model(source.n_channels(), source.window_len(), &cfg)?;
    model.metadata.source_study = spec.source.as_ref().and_then(|s| s.study);
    let (model, _) = train(model, &whitened, &balanced.y, &cfg)?;
    Ok(model)
}

/// Fit one fold's pipeline on training windows only.
pub fn fit_fold(
    spec: &ExperimentSpec,
    train_ds: &WindowedDataset,
    seeds: JobSeeds,
    source_model: Option<&CnnModel>,
) -> Result<FoldFit> {
    let svm_cfg = SvmConfig {
        seed: seeds.svm,
        ..spec.svm.clone()
    };
    match spec.kind {
        ExperimentKind::Raw | ExperimentKind::Handcrafted => {
            let balanced = train_ds.select(&balance_indices(&train_ds.y, seeds.balance)?);
            let f = fixed_features(spec, &balanced)?;
            let svm = crate::svm::svm_train(f.view(), &balanced.y, &svm_cfg)?;
            Ok(FoldFit {
                kind: spec.kind,
                zca: None,
                cnn: None,
                svm,
                loss_history: Vec::new(),
                n_train: balanced.len(),
            })
        }
        ExperimentKind::Cnn | ExperimentKind::TransferredCnn => {
            let (balanced, zca, whitened) =
                prepare_training_set(train_ds, seeds.balance, spec.zca_epsilon)?;
            let cfg = TrainConfig {
                seed: seeds.train,
                ..spec.train.clone()
            };
            let arch = CnnModel::smm_detector(train_ds.n_channels(), train_ds.window_len())?;
            let init = match (spec.kind, source_model) {
                (ExperimentKind::TransferredCnn, Some(src)) => transfer_init(src, &arch)?,
                (ExperimentKind::TransferredCnn, None) => {
                    return Err(Error::validation(
                        "experiment: transfer needs a source model",
                    ))
                }
                _ => init_model(arch.input_channels, arch.input_len, &cfg)?,
            };
            let (model, loss_history) = train(init, &whitened, &balanced.y, &cfg)?;
            let features = model.features(whitened.view())?;
            let svm = crate::svm::svm_train(features.view(), &balanced.y, &svm_cfg)?;
            Ok(FoldFit {
                kind: spec.kind,
                zca: Some(zca),
                cnn: Some(model),
                svm,
                loss_history,
                n_train: balanced.len(),
            })
        }
    }
}

fn fixed_features(spec: &ExperimentSpec, ds: &WindowedDataset) -> Result<Array2<f64>> {
    if spec.kind == ExperimentKind::Raw {
        Ok(ds.flattened())
    } else {
        Ok(
            extract_baseline_features(ds, spec.preprocess.target_rate_hz, &spec.band_edges_hz)?
                .values,
        )
    }
}

/// Feature matrix the SVM sees for `ds` under a fitted fold.
pub fn fold_features(
    spec: &ExperimentSpec,
    fit: &FoldFit,
    ds: &WindowedDataset,
) -> Result<Array2<f64>> {
    match fit.kind {
        ExperimentKind::Raw | ExperimentKind::Handcrafted => fixed_features(spec, ds),
        ExperimentKind::Cnn | ExperimentKind::TransferredCnn => {
            let (zca, cnn) = match (&fit.zca, &fit.cnn) {
                (Some(z), Some(m)) => (z, m),
                _ => {
                    return Err(Error::validation(
                        "experiment: CNN fold is missing its model",
                    ))
                }
            };
            cnn.features(apply_zca(zca, ds.x.view())?.view())
        }
    }
}

pub fn predict_fold(
    spec: &ExperimentSpec,
    fit: &FoldFit,
    test: &WindowedDataset,
) -> Result<Vec<i8>> {
    fit.svm.predict(fold_features(spec, fit, test)?.view())
}

/// Run the LOSO protocol for `spec` on `data`, one job per
/// (repetition, fold), on up to `jobs` threads.
pub fn run_experiment(
    spec: &ExperimentSpec,
    data: &WindowedDataset,
    source: Option<&TransferSource>,
    jobs: usize,
) -> Result<EvalReport> {
    spec.validate()?;
    if spec.kind == ExperimentKind::TransferredCnn && source.is_none() {
        return Err(Error::validation(
            "experiment: transfer needs source data or a source model",
        ));
    }
    let folds = loso_split(data)?;
    // Deterministic kinds are computed once and replicated.
    let distinct_reps = if spec.kind.is_deterministic() {
        1
    } else {
        spec.repetitions
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;

    pool.install(|| {
        let source_models: Vec<Option<CnnModel>> = match (spec.kind, source) {
            (ExperimentKind::TransferredCnn, Some(TransferSource::Data(src))) => (0..distinct_reps)
                .into_par_iter()
                .map(|r| train_source_model(src, spec, r).map(Some))
                .collect::<Result<_>>()?,
            (ExperimentKind::TransferredCnn, Some(TransferSource::Model(m))) => {
                vec![Some(m.clone()); distinct_reps]
            }
            _ => vec![None; distinct_reps],
        };

        // Fixed features are per-window, so computing them once over all
        // windows leaks nothing across folds.
        let fixed = if spec.kind.is_deterministic() {
            Some(fixed_features(spec, data)?)
        } else {
            None
        };

        let job_ids: Vec<(usize, usize)> = (0..distinct_reps)
            .flat_map(|r| (0..folds.len()).map(move |f| (r, f)))
            .collect();
        let results: Vec<JobResult> = job_ids
            .par_iter()
            .map(|&(rep, fold_idx)| {
                let fold = &folds[fold_idx];
                let seeds = JobSeeds::new(spec.base_seed, rep, fold_idx);
                let test_y: Vec<i8> = fold.test.iter().map(|&i| data.y[i]).collect();
                if let Some(features) = &fixed {
                    let train_y: Vec<i8> = fold.train.iter().map(|&i| data.y[i]).collect();
                    let rows: Vec<usize> = balance_indices(&train_y, seeds.balance)?
                        .into_iter()
                        .map(|i| fold.train[i])
                        .collect();
                    let y: Vec<i8> = rows.iter().map(|&i| data.y[i]).collect();
                    let svm_cfg = SvmConfig {
                        seed: seeds.svm,
                        ..spec.svm.clone()
                    };
                    let svm = crate::svm::svm_train(
                        features.select(Axis(0), &rows).view(),
                        &y,
                        &svm_cfg,
                    )?;
                    let pred = svm.predict(features.select(Axis(0), &fold.test).view())?;
                    return Ok(JobResult {
                        repetition: rep,
                        subject: fold.subject.clone(),
                        f1: f1_score(&test_y, &pred)?,
                        final_train_loss: None,
                    });
                }
                let train_ds = data.select(&fold.train);
                let test_ds = data.select(&fold.test);
                let fit = fit_fold(spec, &train_ds, seeds, source_models[rep].as_ref())?;
                let pred = predict_fold(spec, &fit, &test_ds)?;
                Ok(JobResult {
                    repetition: rep,
                    subject: fold.subject.clone(),
                    f1: f1_score(&test_y, &pred)?,
                    final_train_loss: fit.loss_history.last().copied(),
                })
            })
            .collect::<Result<_>>()?;

        let results = if distinct_reps < spec.repetitions {
            (0..spec.repetitions)
                .flat_map(|rep| {
                    results.iter().map(move |j| JobResult {
                        repetition: rep,
                        ..j.clone()
                    })
                })
                .collect()
        } else {
            results
        };
        EvalReport::from_jobs(spec, &folds, results)
    })
}
