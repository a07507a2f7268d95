//! Leave-one-subject-out evaluation of the four experiments.
//!
//! Each (repetition, fold) job derives its seeds from
//! `split(base_seed, [repetition, fold])`, so results do not depend on the
//! order in which jobs run. Balancing, whitening, SVM standardization and
//! CNN training see only the training fold.

pub mod experiment;
pub mod metrics;
pub mod pca;
pub mod report;

pub use experiment::{
    fit_fold, fold_features, predict_fold, prepare_training_set, run_experiment,
    train_source_model, ExperimentKind, ExperimentSpec, FoldFit, JobSeeds, SourceSpec,
    TransferSource, PIPELINE_ZCA_EPSILON,
};
pub use metrics::{f1_score, loso_split, mean_std, Fold};
pub use pca::pca_project;
pub use report::{
    export_pca, export_report, export_summary, summary_csv, EvalReport, SubjectScore,
};
