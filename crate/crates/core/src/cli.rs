//! Command-line front end: `pretrain`, `oracle`, `simulate` and `report`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{load_dataset, Dataset};
use crate::learn::{
    predict_table, pretrain, read_params_file, write_params_file, ClassifierKind,
    ClassifierParams, TrainConfig,
};
use crate::oracle::{accuracy, fdiff_scale, DiffusionParams, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::sim::{
    child_seed, read_metrics_csv, run, write_metrics_csv, ExperimentConfig, RunSummary,
    TrainingMode,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

pub const SEED_ENV: &str = "P2PGNN_SEED";

#[derive(Debug, Parser)]
#[command(name = "p2pgnn", version, about = "Peer-to-peer graph diffusion simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the base classifier centrally and write its parameter file.
    Pretrain(CommonArgs),
    /// Run centralized FDiff-scale and write predictions plus accuracy.
    Oracle(OracleArgs),
    /// Simulate the peer-to-peer protocol and write metrics.
    Simulate(SimulateArgs),
    /// Summarize metrics, summary and oracle files as accuracy and byte tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Power-iteration cap per sub-operation.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub repetitions: Option<u32>,
    #[arg(long)]
    pub metrics_every: Option<u64>,
    /// Also run the same edge draws at half rate (paired seeds).
    #[arg(long)]
    pub half_rate: bool,
    /// Skip the L∞ comparison against the centralized fixed point.
    #[arg(long)]
    pub no_oracle: bool,
    /// Re-run exactly the configuration recorded in a previous manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics CSVs, run summaries or oracle reports.
    pub files: Vec<PathBuf>,
    /// Emit CSV instead of aligned text.
    #[arg(long)]
    pub csv: bool,
}

/// Config file contents; every key is optional so flags can fill gaps.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<DatasetPaths>,
    pub classifier: Option<String>,
    pub mode: Option<String>,
    pub beta: Option<f64>,
    pub s: Option<f64>,
    pub steps: Option<u64>,
    pub repetitions: Option<u32>,
    pub sigma_max: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub splits: PathBuf,
}

/// Fully resolved settings; what a manifest stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub dataset: DatasetPaths,
    pub output_dir: PathBuf,
    pub experiment: ExperimentConfig,
    pub half_rate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ResolvedConfig,
    pub revision: String,
    pub seed: u64,
    pub repetition_seeds: Vec<u64>,
    pub params_file: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix: u64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub classifier: ClassifierKind,
    pub beta: f64,
    pub s: f64,
    pub base_accuracy: f64,
    pub test_accuracy: f64,
    pub error_iterations: usize,
    pub smoothing_iterations: usize,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: FileConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    // relative paths are taken relative to the config file
    let base = path.parent().unwrap_or(Path::new(""));
    if let Some(d) = cfg.dataset.as_mut() {
        for p in [&mut d.nodes, &mut d.edges, &mut d.splits] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    if let Some(o) = cfg.output_dir.as_mut() {
        if o.is_relative() {
            *o = base.join(&*o);
        }
    }
    Ok(cfg)
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn resolve(common: &CommonArgs) -> Result<ResolvedConfig> {
    let file = match &common.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    let dataset = file
        .dataset
        .ok_or_else(|| Error::Config("config is missing dataset.nodes/edges/splits".into()))?;
    let mode: TrainingMode = file.mode.as_deref().unwrap_or("pretrained").parse()?;
    let default_kind = if mode == TrainingMode::Labels { "label" } else { "lr" };
    let classifier: ClassifierKind = file.classifier.as_deref().unwrap_or(default_kind).parse()?;
    let seed = match common.seed.or(file.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let defaults = ExperimentConfig::default();
    let experiment = ExperimentConfig {
        classifier,
        mode,
        diffusion: DiffusionParams {
            beta: file.beta.unwrap_or(defaults.diffusion.beta),
            s: file.s.unwrap_or(defaults.diffusion.s),
        },
        steps: file.steps.unwrap_or(defaults.steps),
        repetitions: file.repetitions.unwrap_or(defaults.repetitions),
        sigma_max: file.sigma_max.unwrap_or(defaults.sigma_max),
        seed,
        train: TrainConfig {
            seed,
            ..TrainConfig::default()
        },
        ..defaults
    };
    let output_dir = common
        .output_dir
        .clone()
        .or(file.output_dir)
        .unwrap_or_else(|| PathBuf::from("p2pgnn-out"));
    Ok(ResolvedConfig {
        dataset,
        output_dir,
        experiment,
        half_rate: false,
    })
}

fn load(cfg: &ResolvedConfig) -> Result<Dataset> {
    let d = &cfg.dataset;
    load_dataset(&d.nodes, &d.edges, &d.splits)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Codec(e.to_string()))?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn params_path(output_dir: &Path) -> PathBuf {
    output_dir.join("params.bin")
}

fn cmd_pretrain(args: &CommonArgs) -> Result<()> {
    let cfg = resolve(args)?;
    let kind = cfg.experiment.classifier;
    if kind == ClassifierKind::Label {
        return Err(Error::Config(
            "the label classifier has no parameters; pretrain needs classifier = \"lr\" or \"mlp\"".into(),
        ));
    }
    let ds = load(&cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let started = Instant::now();
    let out = pretrain(&ds.data, &ds.splits, kind, &cfg.experiment.train)?;
    let path = params_path(&cfg.output_dir);
    write_params_file(&out.params, &path)?;

    let log_path = cfg.output_dir.join("pretrain_log.csv");
    let mut w = csv::Writer::from_writer(create(&log_path)?);
    let codec = |e: csv::Error| Error::Codec(e.to_string());
    w.write_record(["epoch", "train_loss", "valid_loss"]).map_err(codec)?;
    for e in &out.log {
        w.write_record([
            e.epoch.to_string(),
            format!("{:?}", e.train_loss),
            e.valid_loss.map(|v| format!("{v:?}")).unwrap_or_default(),
        ])
        .map_err(codec)?;
    }
    w.flush().map_err(|e| Error::io(&log_path, e))?;
    eprintln!(
        "pretrained {kind} in {:.1}s: best epoch {} of {}, validation loss {}; wrote {}",
        started.elapsed().as_secs_f64(),
        out.best_epoch,
        out.log.len(),
        out.best_valid_loss.map_or("n/a".into(), |v| format!("{v:.4}")),
        path.display()
    );
    Ok(())
}

/// Parameters for pretrained mode: the recorded or stored file, or a fresh
/// training run.
fn pretrained_params(
    cfg: &ResolvedConfig,
    ds: &Dataset,
    recorded: Option<&Path>,
) -> Result<(ClassifierParams, Option<PathBuf>)> {
    let path = recorded.map_or_else(|| params_path(&cfg.output_dir), Path::to_path_buf);
    if recorded.is_some() || path.exists() {
        let params = read_params_file(&path)?;
        if params.kind != cfg.experiment.classifier {
            return Err(Error::Config(format!(
                "{} holds {} parameters but the config asks for {}",
                path.display(),
                params.kind,
                cfg.experiment.classifier
            )));
        }
        return Ok((params, Some(absolute(&path))));
    }
    eprintln!("no {}; pretraining in memory", path.display());
    let out = pretrain(&ds.data, &ds.splits, cfg.experiment.classifier, &cfg.experiment.train)?;
    Ok((out.params, None))
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let cfg = resolve(&args.common)?;
    let ds = load(&cfg)?;
    let known = ds.splits.known();
    let base = if cfg.experiment.classifier == ClassifierKind::Label {
        ds.data.label_table(Some(&known))
    } else {
        let path = params_path(&cfg.output_dir);
        if !path.exists() {
            return Err(Error::Config(format!(
                "{} not found; run `p2pgnn pretrain` first",
                path.display()
            )));
        }
        predict_table(&read_params_file(&path)?, &ds.data)?
    };
    let labels = ds.data.label_table(None);
    let targets = ds.data.label_table(Some(&known));
    let out = fdiff_scale(
        &ds.graph,
        &base,
        &targets,
        &known,
        &cfg.experiment.diffusion,
        args.tol,
        args.max_iters,
    )?;
    ensure_dir(&cfg.output_dir)?;
    let pred_path = cfg.output_dir.join("oracle_predictions.tsv");
    let mut w = create(&pred_path)?;
    out.predictions
        .write_tsv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&pred_path, e))?;
    let report = OracleReport {
        classifier: cfg.experiment.classifier,
        beta: cfg.experiment.diffusion.beta,
        s: cfg.experiment.diffusion.s,
        base_accuracy: accuracy(&base, &labels, &ds.splits.test)?,
        test_accuracy: accuracy(&out.predictions, &labels, &ds.splits.test)?,
        error_iterations: out.error_iterations,
        smoothing_iterations: out.smoothing_iterations,
    };
    write_json(&cfg.output_dir.join("oracle.json"), &report)?;
    println!(
        "centralized test accuracy {:.4} (base {:.4})",
        report.test_accuracy, report.base_accuracy
    );
    Ok(())
}

fn revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| format!("p2pgnn {}", env!("CARGO_PKG_VERSION")))
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    std::env::current_dir().map_or_else(|_| p.to_path_buf(), |d| d.join(p))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let (mut cfg, recorded_params) = match &args.manifest {
        Some(m) => {
            let manifest = read_json::<RunManifest>(m)?;
            (manifest.config, manifest.params_file)
        }
        None => {
            let mut cfg = resolve(&args.common)?;
            cfg.half_rate = args.half_rate;
            (cfg, None)
        }
    };
    if let Some(o) = &args.common.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(seed) = args.common.seed {
        cfg.experiment.seed = seed;
        cfg.experiment.train.seed = seed;
    }
    let e = &mut cfg.experiment;
    if let Some(v) = args.steps {
        e.steps = v;
    }
    if let Some(v) = args.repetitions {
        e.repetitions = v;
    }
    if let Some(v) = args.metrics_every {
        e.metrics_every = v;
    }
    if args.no_oracle {
        e.compare_oracle = false;
    }
    cfg.half_rate |= args.half_rate;
    for p in [&mut cfg.dataset.nodes, &mut cfg.dataset.edges, &mut cfg.dataset.splits] {
        *p = absolute(p);
    }
    cfg.experiment.validate()?;

    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let started = Instant::now();
    let ds = Arc::new(load(&cfg)?);
    let (params, params_file) = if cfg.experiment.mode == TrainingMode::Pretrained {
        let (p, f) = pretrained_params(&cfg, &ds, recorded_params.as_deref())?;
        (Some(p), f)
    } else {
        (None, None)
    };
    ensure_dir(&cfg.output_dir)?;

    let mut outputs = Vec::new();
    let factors: &[(f64, &str)] = if cfg.half_rate {
        &[(1.0, ""), (0.5, "_half")]
    } else {
        &[(1.0, "")]
    };
    for &(factor, suffix) in factors {
        let exp = ExperimentConfig {
            rate_factor: factor,
            ..cfg.experiment.clone()
        };
        let out = run(ds.clone(), &exp, params.as_ref())?;
        let metrics = cfg.output_dir.join(format!("metrics{suffix}.csv"));
        let mut w = create(&metrics)?;
        write_metrics_csv(&out.records, &mut w)?;
        w.flush().map_err(|e| Error::io(&metrics, e))?;
        let summary = cfg.output_dir.join(format!("summary{suffix}.json"));
        write_json(&summary, &out.summary)?;
        println!(
            "{}{}: test accuracy {:.4} ± {:.4} over {} repetitions (base {:.4}{})",
            exp.mode,
            if suffix.is_empty() { "" } else { " (half rate)" },
            out.summary.final_accuracy_mean,
            out.summary.final_accuracy_std,
            exp.repetitions,
            out.summary.base_accuracy_mean,
            out.summary
                .oracle_accuracy
                .map_or(String::new(), |a| format!(", centralized {a:.4}")),
        );
        outputs.push(metrics);
        outputs.push(summary);
    }

    let manifest_path = cfg.output_dir.join("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        revision: revision(),
        seed: cfg.experiment.seed,
        repetition_seeds: (0..cfg.experiment.repetitions)
            .map(|r| child_seed(cfg.experiment.seed, r))
            .collect(),
        params_file,
        outputs,
        started_unix,
        elapsed_secs: started.elapsed().as_secs_f64(),
        config: cfg,
    };
    write_json(&manifest_path, &manifest)
}

/// One row of the report, from whichever file kind was given.
#[derive(Debug, Clone, Default)]
struct ReportRow {
    name: String,
    base: Option<f64>,
    p2p: Option<(f64, f64)>,
    centralized: Option<f64>,
    message_bytes: Option<f64>,
    bytes_diffusion: Option<f64>,
    bytes_training: Option<f64>,
}

fn report_row(path: &Path) -> Result<ReportRow> {
    let name = path.display().to_string();
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext == "csv" {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let records = read_metrics_csv(BufReader::new(f), path)?;
        if records.is_empty() {
            return Err(Error::Validation(format!("{name}: no metrics rows")));
        }
        let mut base = Vec::new();
        let mut last = std::collections::BTreeMap::new();
        for r in &records {
            if r.t == 0 {
                base.push(r.test_accuracy);
            }
            last.insert(r.repetition, r);
        }
        let finals: Vec<f64> = last.values().map(|r| r.test_accuracy).collect();
        let bd: Vec<f64> = last.values().map(|r| r.bytes_diffusion as f64).collect();
        let bt: Vec<f64> = last.values().map(|r| r.bytes_training as f64).collect();
        return Ok(ReportRow {
            name,
            base: (!base.is_empty()).then(|| crate::sim::mean_std(&base).0),
            p2p: Some(crate::sim::mean_std(&finals)),
            bytes_diffusion: Some(crate::sim::mean_std(&bd).0),
            bytes_training: Some(crate::sim::mean_std(&bt).0),
            ..ReportRow::default()
        });
    }
    if ext == "json" {
        let value: serde_json::Value = read_json(path)?;
        if let Ok(s) = serde_json::from_value::<RunSummary>(value.clone()) {
            return Ok(ReportRow {
                name,
                base: Some(s.base_accuracy_mean),
                p2p: Some((s.final_accuracy_mean, s.final_accuracy_std)),
                centralized: s.oracle_accuracy,
                message_bytes: Some(s.message_bytes as f64),
                bytes_diffusion: Some(s.bytes_diffusion_mean),
                bytes_training: Some(s.bytes_training_mean),
            });
        }
        if let Ok(o) = serde_json::from_value::<OracleReport>(value) {
            return Ok(ReportRow {
                name,
                base: Some(o.base_accuracy),
                centralized: Some(o.test_accuracy),
                ..ReportRow::default()
            });
        }
        return Err(Error::Validation(format!(
            "{name}: JSON is neither a run summary nor an oracle report"
        )));
    }
    Err(Error::Validation(format!(
        "{name}: expected a metrics .csv or a summary/oracle .json"
    )))
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    if args.files.is_empty() {
        return Err(Error::Config("report needs at least one metrics, summary or oracle file".into()));
    }
    let rows = args.files.iter().map(|p| report_row(p)).collect::<Result<Vec<_>>>()?;
    let pct = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{:.1}", 100.0 * v));
    let num = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.0}"));
    let ratio = |r: &ReportRow| match (r.bytes_training, r.bytes_diffusion) {
        (Some(t), Some(d)) if d > 0.0 && t > 0.0 => format!("{:.1}", t / d),
        _ => "-".into(),
    };

    let acc_header = ["run", "base", "p2pGNN", "p2pGNN_std", "centralized"];
    let acc: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                pct(r.base),
                pct(r.p2p.map(|p| p.0)),
                pct(r.p2p.map(|p| p.1)),
                pct(r.centralized),
            ]
        })
        .collect();
    let byte_header = ["run", "message_bytes", "bytes_diffusion", "bytes_training", "training_over_diffusion"];
    let bytes: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                num(r.message_bytes),
                num(r.bytes_diffusion),
                num(r.bytes_training),
                ratio(r),
            ]
        })
        .collect();

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    if args.csv {
        let codec = |e: csv::Error| Error::Codec(e.to_string());
        for (k, (header, table)) in [(acc_header, &acc), (byte_header, &bytes)].into_iter().enumerate() {
            if k > 0 {
                writeln!(out).map_err(io)?;
            }
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(header).map_err(codec)?;
            for r in table.iter() {
                w.write_record(r).map_err(codec)?;
            }
            w.flush().map_err(io)?;
        }
    } else {
        writeln!(out, "Accuracy (%)").map_err(io)?;
        write_table(&mut out, &acc_header, &acc).map_err(io)?;
        writeln!(out, "\nBytes").map_err(io)?;
        write_table(&mut out, &byte_header, &bytes).map_err(io)?;
    }
    Ok(())
}

fn write_table<W: Write>(w: &mut W, header: &[&str; 5], rows: &[[String; 5]]) -> std::io::Result<()> {
    let mut widths = header.map(str::len);
    for r in rows {
        for (k, cell) in r.iter().enumerate() {
            widths[k] = widths[k].max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 { format!("{c:<w$}", w = widths[k]) } else { format!("{c:>w$}", w = widths[k]) })
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(w, "{}", line(header.to_vec()))?;
    for r in rows {
        writeln!(w, "{}", line(r.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        _ => EXIT_USAGE,
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
