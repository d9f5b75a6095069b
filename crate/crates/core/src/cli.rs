//! Command-line front end: data preparation, training, evaluation,
//! prediction, baselines and the type-dimension sweep.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline::{evaluate_baseline, BaselineMode, ConditionalTypeTable};
use crate::dataset::{
    dataset_file_hashes, generate_type_triples, load_dataset, write_type_triples, Dataset,
    LoadOptions, Split, TYPE_TRIPLES_FILE,
};
use crate::embedding::ModelKind;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, top_types, RankingReport};
use crate::model::{read_checkpoint, VocabHashes};
use crate::synthetic::{generate, write_dataset_dir, SyntheticSpec};
use crate::training::{run_training, RunOutput, TrainConfig, TrainOutcome, FINAL_CHECKPOINT};

/// Environment variable naming the default data root.
pub const DATA_ENV: &str = "CORE_KGT_DATA";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "core-kgt", version, about = "Entity type prediction with joint KG and type-space embeddings")]
pub struct Cli {
    /// Worker threads for training and evaluation (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Derive type triples from the train split and write them to disk.
    GenTypeTriples(GenTypeTriplesArgs),
    /// Train a model from a TOML config.
    Train(TrainArgs),
    /// Filtered type-ranking evaluation of a checkpoint.
    Eval(EvalArgs),
    /// Top-ranked types for one entity.
    Predict(PredictArgs),
    /// Counting baselines (SDType, SDType-Cond).
    Baseline(BaselineArgs),
    /// Train and evaluate once per type dimension.
    DimSweep(DimSweepArgs),
    /// Write a separable synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Valid,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Valid => Split::Valid,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rotate,
    Complex,
}

impl From<ModeArg> for ModelKind {
    fn from(m: ModeArg) -> ModelKind {
        match m {
            ModeArg::Rotate => ModelKind::RotatE,
            ModeArg::Complex => ModelKind::ComplEx,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Sdtype,
    SdtypeCond,
}

impl From<BaselineArg> for BaselineMode {
    fn from(b: BaselineArg) -> BaselineMode {
        match b {
            BaselineArg::Sdtype => BaselineMode::SdType,
            BaselineArg::SdtypeCond => BaselineMode::SdTypeCond,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenTypeTriplesArgs {
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Output file (default: `<data-dir>/type_triples.txt`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Run directory for logs, manifest and checkpoints.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Override `total_steps`.
    #[arg(long)]
    pub steps: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the data directory recorded with the checkpoint.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-query ranks as TSV.
    #[arg(long)]
    pub ranks: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Entity name as it appears in the data files.
    #[arg(long)]
    pub entity: String,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// JSON output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sdtype-cond")]
    pub baseline: BaselineArg,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reuse a previously saved probability table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Save the fitted probability table.
    #[arg(long)]
    pub save_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DimSweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Type dimensions to try.
    #[arg(long, value_delimiter = ',', default_value = "250,350,550,700")]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "valid")]
    pub split: SplitArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub steps: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Written to the run directory before training starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub data_dir: PathBuf,
    /// SHA-256 of each split file.
    pub dataset_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub git_describe: Option<String>,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn git_describe() -> Option<String> {
    let out = Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let s = String::from_utf8(out.stdout).ok()?.trim().to_owned();
    (!s.is_empty()).then_some(s)
}

/// Resolves a data directory: an explicit path wins, then the configured
/// one, then `$CORE_KGT_DATA`. Relative paths that do not exist are tried
/// under `$CORE_KGT_DATA`.
pub fn resolve_data_dir(explicit: Option<&Path>, configured: Option<&Path>) -> Result<PathBuf> {
    let root = std::env::var_os(DATA_ENV).map(PathBuf::from);
    let chosen = explicit.or(configured);
    match (chosen, root) {
        (Some(p), Some(root)) if p.is_relative() && !p.exists() => Ok(root.join(p)),
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(root)) => Ok(root),
        (None, None) => Err(Error::Config(format!(
            "no data directory: pass --data-dir, set data_dir in the config, or set {DATA_ENV}"
        ))),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_gen_type_triples(data_dir: &Path, out: &Path) -> Result<usize> {
    let ds = load_dataset(data_dir, &LoadOptions::default())?;
    let triples = generate_type_triples(&ds.store.kg_train, &ds.store.tp_train);
    write_type_triples(out, &triples, &ds.types, &ds.relations)?;
    Ok(triples.len())
}

/// Applies command-line overrides to a loaded config.
fn apply_overrides(cfg: &mut TrainConfig, seed: Option<u64>, mode: Option<ModeArg>, steps: Option<u64>) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.model = m.into();
    }
    if let Some(s) = steps {
        cfg.total_steps = s;
    }
}

/// Trains `cfg` on `ds`, writing manifest, log and checkpoints to `out`.
pub fn train_into(cfg: &TrainConfig, ds: &Dataset, out: &Path) -> Result<TrainOutcome> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut manifest = RunManifest {
        config: cfg.clone(),
        data_dir: ds.root.clone(),
        dataset_hashes: dataset_file_hashes(&ds.root)?.into_iter().collect(),
        seed: cfg.seed,
        git_describe: git_describe(),
        started_unix: unix_now(),
        finished_unix: None,
    };
    let manifest_path = out.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;

    let run = RunOutput {
        dir: out.to_path_buf(),
        vocab_hashes: Some(VocabHashes::of(ds)),
        data_dir: Some(ds.root.clone()),
        manifest: Some(MANIFEST_FILE.to_owned()),
    };
    let outcome = run_training(cfg, &ds.store, Some(&run))?;
    manifest.finished_unix = Some(unix_now());
    write_json(&manifest_path, &manifest)?;
    Ok(outcome)
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainOutcome> {
    let mut cfg = TrainConfig::load(&args.config)?;
    apply_overrides(&mut cfg, args.seed, args.mode, args.steps);
    cfg.validate()?;
    let data_dir = resolve_data_dir(args.data_dir.as_deref(), cfg.data_dir.as_deref())?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("seed{}", cfg.seed)));
    let ds = load_dataset(&data_dir, &LoadOptions::default())?;
    let outcome = train_into(&cfg, &ds, &out)?;
    if let (Some(a), Some(b)) = (outcome.initial_valid_mrr, outcome.final_valid_mrr) {
        println!("valid MRR {a:.4} -> {b:.4}");
    }
    println!("checkpoint {}", out.join(FINAL_CHECKPOINT).display());
    Ok(outcome)
}

fn load_for_checkpoint(
    checkpoint: &Path,
    data_dir: Option<&Path>,
) -> Result<(crate::model::CoreModel, Dataset)> {
    let (model, meta) = read_checkpoint(checkpoint)?;
    let dir = resolve_data_dir(data_dir, meta.data_dir.as_deref())?;
    let ds = load_dataset(&dir, &LoadOptions::default())?;
    meta.check_dataset(&ds)?;
    Ok((model, ds))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<RankingReport> {
    let (model, ds) = load_for_checkpoint(&args.checkpoint, args.data_dir.as_deref())?;
    let split: Split = args.split.into();
    let report = evaluate(ds.store.tp_split(split), &model, &ds.store)?;
    if let Some(path) = &args.out {
        report.write_json(path)?;
    }
    if let Some(path) = &args.ranks {
        report.write_ranks_tsv(path, &ds.entities, &ds.types)?;
    }
    println!("{}", report.summary_line());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub rank: usize,
    pub type_name: String,
    pub score: f64,
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Vec<Prediction>> {
    let (model, ds) = load_for_checkpoint(&args.checkpoint, args.data_dir.as_deref())?;
    let e = ds.entity(&args.entity)?;
    let preds: Vec<Prediction> = top_types(&model, e, args.top)?
        .into_iter()
        .enumerate()
        .map(|(i, (t, score))| Prediction {
            rank: i + 1,
            type_name: ds.types.name(t.index()).unwrap_or_default().to_owned(),
            score,
        })
        .collect();
    for p in &preds {
        println!("{}\t{}\t{:.6}", p.rank, p.type_name, p.score);
    }
    if let Some(path) = &args.out {
        write_json(path, &preds)?;
    }
    Ok(preds)
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<RankingReport> {
    let dir = resolve_data_dir(args.data_dir.as_deref(), None)?;
    let ds = load_dataset(&dir, &LoadOptions::default())?;
    let table = match &args.table {
        Some(path) => ConditionalTypeTable::load(path)?,
        None => ConditionalTypeTable::fit(&ds.store),
    };
    if let Some(path) = &args.save_table {
        table.save(path)?;
    }
    let mode: BaselineMode = args.baseline.into();
    let split: Split = args.split.into();
    let report = evaluate_baseline(ds.store.tp_split(split), &ds.store, &table, mode)?;
    if let Some(path) = &args.out {
        report.write_json(path)?;
    }
    println!("{} {}", mode.name(), report.summary_line());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub l: usize,
    pub report: serde_json::Value,
}

pub fn cmd_dim_sweep(args: &DimSweepArgs) -> Result<Vec<SweepPoint>> {
    let mut base = TrainConfig::load(&args.config)?;
    apply_overrides(&mut base, args.seed, args.mode, args.steps);
    let dir = resolve_data_dir(args.data_dir.as_deref(), base.data_dir.as_deref())?;
    let out = args
        .out
        .clone()
        .or_else(|| base.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join("dim_sweep"));
    let ds = load_dataset(&dir, &LoadOptions::default())?;
    let split: Split = args.split.into();
    let mut points = Vec::with_capacity(args.dims.len());
    for &l in &args.dims {
        let mut cfg = base.clone();
        cfg.l = l;
        cfg.validate()?;
        let outcome = train_into(&cfg, &ds, &out.join(format!("l{l}")))?;
        let report = evaluate(ds.store.tp_split(split), &outcome.model, &ds.store)?;
        println!("l={l}\t{}", report.summary_line());
        points.push(SweepPoint {
            l,
            report: report.to_json(),
        });
    }
    write_json(&out.join("sweep.json"), &points)?;
    Ok(points)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let ds = generate(&SyntheticSpec {
        seed: args.seed,
        ..Default::default()
    })?;
    write_dataset_dir(&ds, &args.out)?;
    println!(
        "wrote {} triples, {} type pairs to {}",
        ds.store.kg_train.len(),
        ds.store.tp_train.len() + ds.store.tp_valid.len() + ds.store.tp_test.len(),
        args.out.display()
    );
    Ok(())
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, e.g. a second call in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Commands::GenTypeTriples(a) => {
            let dir = resolve_data_dir(a.data_dir.as_deref(), None)?;
            let out = a.out.clone().unwrap_or_else(|| dir.join(TYPE_TRIPLES_FILE));
            let n = cmd_gen_type_triples(&dir, &out)?;
            println!("wrote {n} type triples to {}", out.display());
        }
        Commands::Train(a) => {
            cmd_train(a)?;
        }
        Commands::Eval(a) => {
            cmd_eval(a)?;
        }
        Commands::Predict(a) => {
            cmd_predict(a)?;
        }
        Commands::Baseline(a) => {
            cmd_baseline(a)?;
        }
        Commands::DimSweep(a) => {
            cmd_dim_sweep(a)?;
        }
        Commands::Synth(a) => cmd_synth(a)?,
    }
    Ok(())
}
