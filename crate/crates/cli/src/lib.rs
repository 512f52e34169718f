//! Command-line driver. `run` parses arguments and dispatches to one of the
//! subcommands; every failure maps onto a fixed exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cuisine_core::arch::{load_checkpoint, render_trace, shape_trace, ArchError, CheckpointError};
use cuisine_core::data::{
    load_image, parse_manifest, stratified_split, synth_dataset_with, DataError, Split, SynthOptions, CUISINES,
    DEFAULT_FRACTIONS, DEFAULT_SYNTH_SIZE, FLAVORS, MANIFEST_NAME,
};
use cuisine_core::objective::MetricsReport;
use cuisine_core::run_config::{ConfigError, RunConfig};
use cuisine_core::train::{evaluate, fit, predict, ImageSet, TrainError};
use cuisine_core::{Model, TensorError};

pub const CONFIG_ECHO: &str = "config.txt";
pub const TRAIN_LOG: &str = "train.log";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Data(_) => exit::DATA,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Io(_) => exit::IO,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io(_) => CliError::Io(e.to_string()),
            CheckpointError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ArchError> for CliError {
    fn from(e: ArchError) -> Self {
        match e {
            ArchError::InvalidConfig(_) => CliError::Config(e.to_string()),
            ArchError::InvalidInput(_) => CliError::Data(e.to_string()),
            ArchError::Tensor(t) => t.into(),
        }
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        match e {
            TensorError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Config(e.to_string()),
            TrainError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            TrainError::Io { .. } => CliError::Io(e.to_string()),
            TrainError::Data(d) => d.into(),
            TrainError::Checkpoint(c) => c.into(),
            TrainError::Arch(a) => a.into(),
            TrainError::Tensor(t) => t.into(),
            TrainError::EmptySplit(_) | TrainError::Objective(_) | TrainError::MissingGradient(_) => {
                CliError::Data(e.to_string())
            }
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

#[derive(Debug, Parser)]
#[command(
    name = "cuisine",
    version,
    about = "Cuisine and flavor classification from food images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic dataset with a split column.
    Synth(SynthArgs),
    /// Train a model; writes config echo, log, checkpoints and reports.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one manifest split.
    Eval(EvalArgs),
    /// Classify one image.
    Predict(PredictArgs),
    /// Print the per-layer shape trace of a configuration.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Images per (cuisine, flavor) pair.
    #[arg(long, default_value_t = 1)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Side length of the generated images.
    #[arg(long, default_value_t = DEFAULT_SYNTH_SIZE)]
    pub size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Config file plus overrides shared by train and inspect.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key (repeatable), e.g. `--set epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Directory for the report files (default: next to the checkpoint).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    pub image: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing human-readable output to `out`.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    dispatch(cli, out)
}

pub fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Train(a) => cmd_train(&a, out).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a, out).map(|_| ()),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("<stdout>: {e}")))
}

pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.per_class == 0 {
        return Err(CliError::Config("per_class must be at least 1".into()));
    }
    if a.size < 8 {
        return Err(CliError::Config("size must be at least 8".into()));
    }
    let opts = SynthOptions {
        size: a.size,
        ..SynthOptions::new(a.per_class, a.seed)
    };
    let manifest = synth_dataset_with(&opts, &a.out)?;
    let manifest = stratified_split(&manifest, DEFAULT_FRACTIONS, a.seed)?;
    let path = a.out.join(MANIFEST_NAME);
    manifest.write(&path)?;
    let count = |s| manifest.subset(Some(s)).len();
    say(
        out,
        &format!(
            "wrote {} images and {} (train {}, val {}, test {})\n",
            manifest.len(),
            path.display(),
            count(Split::Train),
            count(Split::Val),
            count(Split::Test)
        ),
    )
}

/// Reads the config file, applies overrides and makes paths absolute.
pub fn load_run_config(args: &ConfigArgs, extra: &[String]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        cfg.merge_text(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    for o in args.overrides.iter().chain(extra) {
        cfg.apply_override(o)?;
    }
    let cwd = std::env::current_dir().map_err(|e| io_err(Path::new("."), e))?;
    cfg.resolve_paths(&cwd);
    cfg.validate()?;
    Ok(cfg)
}

/// Paths written by a training run.
#[derive(Debug, Clone)]
pub struct TrainOutputs {
    pub run_dir: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub reports: Vec<PathBuf>,
}

fn write_report(dir: &Path, report: &MetricsReport) -> Result<[PathBuf; 2], CliError> {
    let txt = dir.join(format!("report_{}.txt", report.split));
    let kv = dir.join(format!("report_{}.kv", report.split));
    write_file(&txt, report.render_table().as_bytes())?;
    write_file(&kv, report.render_kv().as_bytes())?;
    Ok([txt, kv])
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<TrainOutputs, CliError> {
    let mut extra = Vec::new();
    if let Some(m) = &a.manifest {
        extra.push(format!("manifest={}", m.display()));
    }
    if let Some(d) = &a.out_dir {
        extra.push(format!("out_dir={}", d.display()));
    }
    if let Some(e) = a.epochs {
        extra.push(format!("epochs={e}"));
    }
    if let Some(s) = a.seed {
        extra.push(format!("seed={s}"));
    }
    if let Some(w) = a.workers {
        extra.push(format!("workers={w}"));
    }
    let cfg = load_run_config(&a.config, &extra)?;
    let manifest_path = cfg.require_manifest()?.to_path_buf();
    let manifest = parse_manifest(&manifest_path)?;
    let size = cfg.model.input_size;
    let train = ImageSet::load(&manifest, Some(Split::Train), size, cfg.train.workers)?;
    let val = ImageSet::load(&manifest, Some(Split::Val), size, cfg.train.workers)?;

    let run_dir = cfg.out_dir.clone();
    let ckpt_dir = run_dir.join(CHECKPOINT_DIR);
    create_dir(&ckpt_dir)?;
    write_file(&run_dir.join(CONFIG_ECHO), cfg.to_text().as_bytes())?;
    say(
        out,
        &format!(
            "training on {} images ({} val) for {} epochs -> {}\n",
            train.len(),
            val.len(),
            cfg.train.epochs,
            run_dir.display()
        ),
    )?;

    let model = Model::<f32>::new(&cfg.model, cfg.train.seed)?;
    let log_path = run_dir.join(TRAIN_LOG);
    let mut log = fs::File::create(&log_path).map_err(|e| io_err(&log_path, e))?;
    let val_ref = (!val.is_empty()).then_some(&val);
    let result = fit(&model, &cfg.train, &train, val_ref, Some(&ckpt_dir), Some(&mut log))?;
    if let Some(last) = result.epochs.last() {
        say(
            out,
            &format!("final epoch {}: joint loss {:.6}\n", last.epoch, last.joint),
        )?;
    }

    let mut reports = Vec::new();
    let batch = cfg.train.batch_size;
    let mut sets = vec![(Split::Train, &train)];
    if !val.is_empty() {
        sets.push((Split::Val, &val));
    }
    for (split, set) in sets {
        let report = evaluate(&model, set, split.as_str(), batch)?;
        say(out, &report.render_table())?;
        reports.extend(write_report(&run_dir, &report)?);
    }
    Ok(TrainOutputs {
        run_dir,
        checkpoints: result.checkpoints,
        reports,
    })
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<MetricsReport, CliError> {
    let (model, _) = load_checkpoint::<f32>(&a.checkpoint)?;
    let manifest = parse_manifest(&a.manifest)?;
    let set = ImageSet::load(&manifest, Some(a.split), model.config().input_size, a.workers.max(1))?;
    let report = evaluate(&model, &set, a.split.as_str(), a.batch_size.max(1))?;
    let dir = match &a.out {
        Some(d) => d.clone(),
        None => a.checkpoint.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    create_dir(&dir)?;
    write_report(&dir, &report)?;
    say(out, &report.render_table())?;
    Ok(report)
}

pub fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (model, _) = load_checkpoint::<f32>(&a.checkpoint)?;
    let image = load_image(&a.image, model.config().input_size)?;
    let p = predict(&model, &image)?;
    let name = |vocab: &[&str], i: usize| vocab.get(i).map_or_else(|| i.to_string(), |s| s.to_string());
    say(
        out,
        &format!(
            "cuisine: {} ({:.4})\nflavor: {} ({:.4})\n",
            name(&CUISINES, p.cuisine),
            p.cuisine_probs[p.cuisine],
            name(&FLAVORS, p.flavor),
            p.flavor_probs[p.flavor]
        ),
    )
}

pub fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_run_config(&a.config, &[])?;
    say(out, &render_trace(&shape_trace(&cfg.model)?))
}
