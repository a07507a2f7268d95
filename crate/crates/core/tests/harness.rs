use ndarray::Axis;

use smm_detect::data_io::{synth_generate, SynthConfig};
use smm_detect::harness::{
    f1_score, fit_fold, loso_split, predict_fold, run_experiment, ExperimentKind, ExperimentSpec,
    JobSeeds, SourceSpec, TransferSource,
};
use smm_detect::nn::TrainConfig;
use smm_detect::signal::{
    balance_indices, windows_from_recordings, PreprocessConfig, WindowConfig, WindowedDataset,
};

fn small_data(seed: u64) -> WindowedDataset {
    let cfg = SynthConfig {
        n_subjects: 3,
        duration_s: 120.0,
        seed,
        ..SynthConfig::default()
    };
    let recs = synth_generate(&cfg).unwrap();
    windows_from_recordings(
        &recs,
        &PreprocessConfig::default(),
        &WindowConfig::default(),
    )
    .unwrap()
}

fn quick(kind: ExperimentKind) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(kind);
    spec.repetitions = 2;
    spec.train = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    spec.svm.epochs = 5;
    spec
}

#[test]
fn zca_is_fitted_on_the_balanced_training_fold_only() {
    let data = small_data(3);
    let spec = quick(ExperimentKind::Cnn);
    let folds = loso_split(&data).unwrap();
    let seeds = JobSeeds::new(0, 0, 0);
    let train = data.select(&folds[0].train);
    let fit = fit_fold(&spec, &train, seeds, None).unwrap();

    let balanced = train.select(&balance_indices(&train.y, seeds.balance).unwrap());
    let expected_mean = balanced.flattened().mean_axis(Axis(0)).unwrap();
    let zca = fit.zca.unwrap();
    assert_eq!(fit.n_train, balanced.len());
    for (a, b) in zca.mean.iter().zip(&expected_mean) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn held_out_windows_do_not_influence_the_fit() {
    let data = small_data(4);
    let spec = quick(ExperimentKind::Cnn);
    let folds = loso_split(&data).unwrap();
    let seeds = JobSeeds::new(9, 1, 0);

    let mut corrupted = data.clone();
    for &i in &folds[0].test {
        corrupted
            .x
            .index_axis_mut(Axis(0), i)
            .mapv_inplace(|v| 1e3 * v + 5.0);
        corrupted.y[i] = -corrupted.y[i];
    }
    let a = fit_fold(&spec, &data.select(&folds[0].train), seeds, None).unwrap();
    let b = fit_fold(&spec, &corrupted.select(&folds[0].train), seeds, None).unwrap();
    assert_eq!(a.cnn, b.cnn);
    assert_eq!(a.svm, b.svm);
}

#[test]
fn cached_fixed_features_match_per_fold_fits() {
    let data = small_data(5);
    for kind in [ExperimentKind::Raw, ExperimentKind::Handcrafted] {
        let spec = quick(kind);
        let report = run_experiment(&spec, &data, None, 1).unwrap();
        for (f, fold) in loso_split(&data).unwrap().iter().enumerate() {
            let fit = fit_fold(
                &spec,
                &data.select(&fold.train),
                JobSeeds::new(spec.base_seed, 0, f),
                None,
            )
            .unwrap();
            let test = data.select(&fold.test);
            let f1 = f1_score(&test.y, &predict_fold(&spec, &fit, &test).unwrap()).unwrap();
            let subj = report
                .subjects
                .iter()
                .find(|s| s.subject == fold.subject)
                .unwrap();
            assert!(
                subj.scores.iter().all(|&s| s == f1),
                "{kind:?} {}",
                fold.subject
            );
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let data = small_data(6);
    let spec = quick(ExperimentKind::Cnn);
    let one = run_experiment(&spec, &data, None, 1).unwrap();
    let two = run_experiment(&spec, &data, None, 2).unwrap();
    assert_eq!(one.to_json(), two.to_json());
    assert_eq!(
        one.final_train_loss.as_ref().map(Vec::len),
        Some(spec.repetitions)
    );
}

#[test]
fn transfer_from_source_data_runs() {
    let target = small_data(7);
    let source_cfg = SynthConfig {
        n_subjects: 2,
        duration_s: 60.0,
        seed: 8,
        ..SynthConfig::default()
    };
    let source = windows_from_recordings(
        &synth_generate(&source_cfg).unwrap(),
        &PreprocessConfig::default(),
        &WindowConfig::default(),
    )
    .unwrap();
    let mut spec = quick(ExperimentKind::TransferredCnn);
    spec.repetitions = 1;
    spec.source = Some(SourceSpec {
        study: Some(source_cfg.study_id),
        manifest: None,
        model_file: None,
    });
    let report = run_experiment(&spec, &target, Some(&TransferSource::Data(source)), 1).unwrap();
    assert_eq!(report.subjects.len(), 3);
    assert!(run_experiment(&spec, &target, None, 1).is_err());
}
