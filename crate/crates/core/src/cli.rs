//! The `smm-detect` command line.
//!
//! Subcommands: `synth`, `run`, `train`, `export-pca`. Every flag defaults to
//! the matching library default. `--config FILE` reads a JSON object whose
//! keys are long flag names; flags given on the command line win.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data_io::{
    load_model, load_recordings, save_model, synth_generate, write_dataset, RawRecording, StudyId,
    SynthConfig,
};
use crate::error::{Error, Result};
use crate::features::{extract_baseline_features, DEFAULT_BAND_EDGES_HZ};
use crate::harness::{
    export_pca, export_report, export_summary, prepare_training_set, run_experiment, summary_csv,
    ExperimentKind, ExperimentSpec, SourceSpec, TransferSource,
};
use crate::nn::{init_model, train, TrainConfig};
use crate::rng::{split, stream};
use crate::signal::{
    apply_zca, fit_zca, windows_from_recordings, PreprocessConfig, WindowConfig, WindowedDataset,
};
use crate::svm::SvmConfig;

#[derive(Parser, Debug)]
#[command(
    name = "smm-detect",
    version,
    about = "SMM detection from wearable accelerometer data"
)]
#[command(args_override_self = true)]
struct Cli {
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic study (manifest + CSVs).
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Run one experiment under leave-one-subject-out evaluation.
    #[command(args_override_self = true)]
    Run(RunArgs),
    /// Train a CNN on a whole study and save it.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Project features onto their first two principal components.
    #[command(args_override_self = true)]
    ExportPca(PcaArgs),
}

fn study(s: &str) -> std::result::Result<StudyId, String> {
    StudyId::parse(s).ok_or_else(|| format!("unknown study `{s}` (expected study1 or study2)"))
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().n_subjects)]
    subjects: usize,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long, value_parser = study, default_value = "study1")]
    study: StudyId,
    #[arg(long, default_value_t = SynthConfig::default().duration_s)]
    duration_s: f64,
    #[arg(long, default_value_t = SynthConfig::default().sample_rate_hz)]
    rate_hz: f64,
    /// Mean SMM bursts per minute.
    #[arg(long, default_value_t = SynthConfig::default().smm_burst_rate)]
    burst_rate: f64,
    #[arg(long, default_value_t = SynthConfig::default().burst_freq_range_hz.0)]
    burst_freq_min_hz: f64,
    #[arg(long, default_value_t = SynthConfig::default().burst_freq_range_hz.1)]
    burst_freq_max_hz: f64,
    #[arg(long, default_value_t = SynthConfig::default().burst_duration_range_s.0)]
    burst_duration_min_s: f64,
    #[arg(long, default_value_t = SynthConfig::default().burst_duration_range_s.1)]
    burst_duration_max_s: f64,
    #[arg(long, default_value_t = SynthConfig::default().burst_amplitude)]
    burst_amplitude: f64,
    #[arg(long, default_value_t = SynthConfig::default().noise_std)]
    noise_std: f64,
    #[arg(long, default_value_t = SynthConfig::default().per_subject_jitter)]
    jitter: f64,
    /// JSON file of flag values; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    #[arg(long, default_value_t = PreprocessConfig::default().target_rate_hz)]
    target_rate_hz: f64,
    #[arg(long, default_value_t = PreprocessConfig::default().highpass_cutoff_hz)]
    highpass_hz: f64,
    #[arg(long, default_value_t = WindowConfig::default().window_len)]
    window_len: usize,
    #[arg(long, default_value_t = WindowConfig::default().step)]
    step: usize,
    /// Minimum SMM fraction of a window for a positive label.
    #[arg(long, default_value_t = WindowConfig::default().smm_fraction_threshold)]
    smm_threshold: f64,
    #[arg(long, default_value_t = crate::harness::PIPELINE_ZCA_EPSILON)]
    zca_epsilon: f64,
}

impl PipelineArgs {
    fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig {
            target_rate_hz: self.target_rate_hz,
            highpass_cutoff_hz: self.highpass_hz,
        }
    }

    fn window(&self) -> WindowConfig {
        WindowConfig {
            window_len: self.window_len,
            step: self.step,
            smm_fraction_threshold: self.smm_threshold,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct CnnArgs {
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().momentum)]
    momentum: f64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().init_std)]
    init_std: f64,
}

impl CnnArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            momentum: self.momentum,
            epochs: self.epochs,
            batch_size: self.batch_size,
            init_std: self.init_std,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExperimentArg {
    Raw,
    Handcrafted,
    Cnn,
    Transfer,
}

impl From<ExperimentArg> for ExperimentKind {
    fn from(a: ExperimentArg) -> Self {
        match a {
            ExperimentArg::Raw => ExperimentKind::Raw,
            ExperimentArg::Handcrafted => ExperimentKind::Handcrafted,
            ExperimentArg::Cnn => ExperimentKind::Cnn,
            ExperimentArg::Transfer => ExperimentKind::TransferredCnn,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    /// Target study manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Only use recordings of this study from the manifest.
    #[arg(long, value_parser = study)]
    study: Option<StudyId>,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// CSV summary path [default: the report path with a .csv extension].
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Source study manifest (transfer only).
    #[arg(long)]
    source_manifest: Option<PathBuf>,
    /// Pre-trained source model (transfer only).
    #[arg(long)]
    source_model: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for (repetition, fold) jobs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = SvmConfig::default().c)]
    svm_c: f64,
    #[arg(long, default_value_t = SvmConfig::default().epochs)]
    svm_epochs: usize,
    #[command(flatten)]
    cnn: CnnArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// JSON file of flag values; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = study)]
    study: Option<StudyId>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    cnn: CnnArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// JSON file of flag values; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FeatureArg {
    Raw,
    Handcrafted,
    Cnn,
}

#[derive(Args, Debug)]
struct PcaArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = study)]
    study: Option<StudyId>,
    #[arg(long, value_enum)]
    features: FeatureArg,
    /// Trained model (required for cnn features).
    #[arg(long)]
    model: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// JSON file of flag values; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Turn a JSON object of flag values into `--flag value` arguments.
fn config_args(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?;
    let obj = value.as_object().ok_or_else(|| {
        Error::validation(format!("config {}: expected a JSON object", path.display()))
    })?;
    let mut args = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => args.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => args.extend([flag.into(), s.into()]),
            serde_json::Value::Number(n) => args.extend([flag.into(), n.to_string().into()]),
            _ => {
                return Err(Error::validation(format!(
                    "config {}: value of `{key}` must be a string, number or boolean",
                    path.display()
                )))
            }
        }
    }
    Ok(args)
}

/// Value of `--config` in raw arguments. Located before parsing because the
/// config may supply otherwise required flags.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let a = a.to_str()?;
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

enum Parsed {
    Cli(Box<Cli>),
    Exit(i32),
}

fn parse(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> Result<Parsed> {
    let parse_once =
        |args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write| match Cli::try_parse_from(
            args,
        ) {
            Ok(cli) => Parsed::Cli(Box::new(cli)),
            Err(e) => {
                let code = if e.use_stderr() { 1 } else { 0 };
                let text = e.render().to_string();
                let _ = if code == 0 {
                    out.write_all(text.as_bytes())
                } else {
                    err.write_all(text.as_bytes())
                };
                Parsed::Exit(code)
            }
        };
    let Some(path) = config_path(&args) else {
        return Ok(parse_once(args, out, err));
    };
    // Config values go right after the subcommand so command-line flags,
    // which come later, override them.
    let sub_pos = args
        .iter()
        .position(|a| matches!(a.to_str(), Some("synth" | "run" | "train" | "export-pca")));
    let Some(sub_pos) = sub_pos else {
        return Ok(parse_once(args, out, err));
    };
    let mut merged = args[..=sub_pos].to_vec();
    merged.extend(config_args(&path)?);
    merged.extend_from_slice(&args[sub_pos + 1..]);
    Ok(parse_once(merged, out, err))
}

/// Run the CLI on `args` (including the program name) and return the exit
/// code: 0 success, 1 validation or usage error, 2 I/O error.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = parse(args, out, err).and_then(|parsed| match parsed {
        Parsed::Exit(code) => Ok(code),
        Parsed::Cli(cli) => {
            let log = Logger {
                verbose: cli.verbose,
                start: Instant::now(),
            };
            match cli.command {
                Command::Synth(a) => cmd_synth(&a, out, &log),
                Command::Run(a) => cmd_run(&a, out, err, &log),
                Command::Train(a) => cmd_train(&a, err, &log),
                Command::ExportPca(a) => cmd_export_pca(&a, err, &log),
            }
            .map(|()| 0)
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

struct Logger {
    verbose: bool,
    start: Instant,
}

impl Logger {
    fn note(&self, err: &mut dyn Write, msg: &str) {
        if self.verbose {
            let _ = writeln!(err, "[{:>7.1}s] {msg}", self.start.elapsed().as_secs_f64());
        }
    }
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write, _log: &Logger) -> Result<()> {
    let cfg = SynthConfig {
        study_id: a.study,
        n_subjects: a.subjects,
        duration_s: a.duration_s,
        sample_rate_hz: a.rate_hz,
        smm_burst_rate: a.burst_rate,
        burst_freq_range_hz: (a.burst_freq_min_hz, a.burst_freq_max_hz),
        burst_duration_range_s: (a.burst_duration_min_s, a.burst_duration_max_s),
        burst_amplitude: a.burst_amplitude,
        noise_std: a.noise_std,
        per_subject_jitter: a.jitter,
        seed: a.seed,
    };
    let recordings = synth_generate(&cfg)?;
    let manifest = write_dataset(&recordings, &a.out)?;
    let _ = writeln!(out, "{}", manifest.display());
    Ok(())
}

fn load_windows(
    manifest: &Path,
    study: Option<StudyId>,
    pipeline: &PipelineArgs,
    err: &mut dyn Write,
    log: &Logger,
) -> Result<(WindowedDataset, Option<StudyId>)> {
    let recordings: Vec<RawRecording> = load_recordings(manifest)?
        .into_iter()
        .filter(|r| study.is_none_or(|s| r.study_id == s))
        .collect();
    if recordings.is_empty() {
        return Err(Error::validation(format!(
            "{}: no recordings selected",
            manifest.display()
        )));
    }
    let studies: Vec<StudyId> = recordings.iter().map(|r| r.study_id).collect();
    let single_study = studies
        .iter()
        .all(|s| *s == studies[0])
        .then_some(studies[0]);
    let ds = windows_from_recordings(&recordings, &pipeline.preprocess(), &pipeline.window())?;
    let (pos, neg) = ds.class_counts();
    log.note(
        err,
        &format!(
            "{}: {} windows ({pos} SMM, {neg} no-SMM)",
            manifest.display(),
            ds.len()
        ),
    );
    Ok((ds, single_study))
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write, log: &Logger) -> Result<()> {
    let kind = ExperimentKind::from(a.experiment);
    if kind == ExperimentKind::TransferredCnn {
        match (&a.source_manifest, &a.source_model) {
            (None, None) => {
                return Err(Error::validation(
                    "run: transfer needs --source-manifest or --source-model",
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::validation(
                    "run: give only one of --source-manifest and --source-model",
                ))
            }
            _ => {}
        }
    } else if a.source_manifest.is_some() || a.source_model.is_some() {
        return Err(Error::validation(
            "run: source flags only apply to --experiment transfer",
        ));
    }

    let (data, target_study) = load_windows(&a.manifest, a.study, &a.pipeline, err, log)?;
    let source = match (&a.source_manifest, &a.source_model) {
        (Some(m), _) if kind == ExperimentKind::TransferredCnn => {
            let (ds, study) = load_windows(m, None, &a.pipeline, err, log)?;
            Some((TransferSource::Data(ds), study))
        }
        (_, Some(p)) if kind == ExperimentKind::TransferredCnn => {
            let model = load_model(p)?;
            let study = model.metadata.source_study;
            Some((TransferSource::Model(model), study))
        }
        _ => None,
    };

    let spec = ExperimentSpec {
        kind,
        target_study: a.study.or(target_study),
        target_manifest: Some(a.manifest.display().to_string()),
        source: source.as_ref().map(|(_, study)| SourceSpec {
            study: *study,
            manifest: a.source_manifest.as_ref().map(|p| p.display().to_string()),
            model_file: a.source_model.as_ref().map(|p| p.display().to_string()),
        }),
        train: a.cnn.config(a.seed),
        svm: SvmConfig {
            c: a.svm_c,
            epochs: a.svm_epochs,
            seed: 0,
        },
        repetitions: a.repetitions,
        base_seed: a.seed,
        zca_epsilon: a.pipeline.zca_epsilon,
        preprocess: a.pipeline.preprocess(),
        window: a.pipeline.window(),
        band_edges_hz: DEFAULT_BAND_EDGES_HZ.to_vec(),
    };
    log.note(
        err,
        &format!(
            "running {} with {} repetition(s)",
            kind.as_str(),
            spec.repetitions
        ),
    );
    let report = run_experiment(&spec, &data, source.as_ref().map(|(s, _)| s), a.jobs)?;
    export_report(&report, &a.out)?;
    let summary_path = a
        .summary
        .clone()
        .unwrap_or_else(|| a.out.with_extension("csv"));
    export_summary(std::slice::from_ref(&report), &summary_path)?;
    log.note(
        err,
        &format!("wrote {} and {}", a.out.display(), summary_path.display()),
    );
    let _ = out.write_all(summary_csv(std::slice::from_ref(&report)).as_bytes());
    Ok(())
}

fn cmd_train(a: &TrainArgs, err: &mut dyn Write, log: &Logger) -> Result<()> {
    let (data, study) = load_windows(&a.manifest, a.study, &a.pipeline, err, log)?;
    let cfg = a.cnn.config(a.seed);
    cfg.validate()?;
    let (balanced, _, whitened) = prepare_training_set(
        &data,
        split(a.seed, &[stream::BALANCE]),
        a.pipeline.zca_epsilon,
    )?;
    let mut model = init_model(data.n_channels(), data.window_len(), &cfg)?;
    model.metadata.source_study = a.study.or(study);
    log.note(
        err,
        &format!("training on {} balanced windows", balanced.len()),
    );
    let (model, history) = train(model, &whitened, &balanced.y, &cfg)?;
    if let Some(loss) = history.last() {
        log.note(err, &format!("final training loss {loss:.6}"));
    }
    save_model(&model, &a.out)
}

fn cmd_export_pca(a: &PcaArgs, err: &mut dyn Write, log: &Logger) -> Result<()> {
    let (data, _) = load_windows(&a.manifest, a.study, &a.pipeline, err, log)?;
    let features = match a.features {
        FeatureArg::Raw => data.flattened(),
        FeatureArg::Handcrafted => {
            extract_baseline_features(&data, a.pipeline.target_rate_hz, &DEFAULT_BAND_EDGES_HZ)?
                .values
        }
        FeatureArg::Cnn => {
            let path = a
                .model
                .as_ref()
                .ok_or_else(|| Error::validation("export-pca: --features cnn needs --model"))?;
            let model = load_model(path)?;
            // Whitening is refitted on the exported windows themselves.
            let zca = fit_zca(data.x.view(), a.pipeline.zca_epsilon)?;
            model.features(apply_zca(&zca, data.x.view())?.view())?
        }
    };
    export_pca(features.view(), &data.y, &a.out)?;
    log.note(
        err,
        &format!("wrote {} ({} rows)", a.out.display(), data.len()),
    );
    Ok(())
}
