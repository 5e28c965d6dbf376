//! Command-line interface.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_kernel_kind, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{clip_dims, evaluate_session, parse_dims, sweep_session, SessionReport, SweepCurve};
use crate::io::{load_datasets, read_signals_csv, write_dataset};
use crate::pipeline::{classify_detailed, load_model, save_model, train_ab_svm};
use crate::report::render_report;
use crate::signal::{DirectionId, Session, CYCLES};
use crate::simulator::{generate_dataset, LabeledDataset};
use crate::svm::KernelKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Debug, Parser)]
#[command(
    name = "aic",
    version,
    about = "Traffic-signal incident classification with an AdaBoost gate and a multi-class SVM",
    after_help = "The seed falls back to the AIC_SEED environment variable, then 2016."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate labelled datasets, one CSV per (direction, session).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model for one session and direction.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Dataset CSV or a directory of them.
        #[arg(long)]
        data: PathBuf,
        /// Model JSON to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify every signal of a CSV file.
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// Signal CSV; the category column may be `?`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Cross-validate on every selected dataset and write accuracy and confusion tables.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        data: PathBuf,
        /// Number of folds [default: 5].
        #[arg(long)]
        folds: Option<usize>,
        /// Report directory.
        #[arg(long)]
        report: PathBuf,
    },
    /// Accuracy against PCA dimension, on identical folds for every dimension.
    SweepPca {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        data: PathBuf,
        /// `start:stop:step` (inclusive) or a comma-separated list; dimensions
        /// above the largest valid one are clipped [default: 5:85:5].
        #[arg(long)]
        dims: Option<String>,
        /// Number of folds [default: 5].
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed [default: AIC_SEED or 2016].
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one session (am|pm).
    #[arg(long)]
    session: Option<Session>,
    /// Restrict to one direction, e.g. Entry-E or EDD-N-left.
    #[arg(long)]
    direction: Option<DirectionId>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// SVM kernel: linear, poly or rbf [default: linear].
    #[arg(long, value_parser = parse_kernel_kind)]
    kernel: Option<KernelKind>,
    /// Polynomial kernel degree [default: 3].
    #[arg(long)]
    degree: Option<u32>,
    /// RBF width [default: 1 / (k * variance of the training features)].
    #[arg(long)]
    gamma_rbf: Option<f64>,
    /// PCA dimension [default: 25 for AM, 40 for PM].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pca_dim: Option<u64>,
    /// Boosting rounds [default: 50].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rounds: Option<u64>,
    /// SVM penalty weight [default: 1].
    #[arg(long)]
    gamma: Option<f64>,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn resolve(common: &Common, model: Option<&ModelArgs>, folds: Option<usize>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::from_env().map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(path) = &common.config {
        cfg.apply_file(path).map_err(|e| match e {
            Error::Io { .. } => Failure::Data(e),
            other => Failure::Usage(other.to_string()),
        })?;
    }
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if common.session.is_some() {
        cfg.session = common.session;
    }
    if common.direction.is_some() {
        cfg.direction = common.direction;
    }
    if let Some(m) = model {
        let k = &mut cfg.pipeline.kernel;
        if let Some(kind) = m.kernel {
            k.kind = kind;
        }
        if let Some(d) = m.degree {
            k.degree = d;
        }
        if m.gamma_rbf.is_some() {
            k.gamma_rbf = m.gamma_rbf;
        }
        if let Some(d) = m.pca_dim {
            cfg.pipeline.pca_dim = Some(d as usize);
        }
        if let Some(r) = m.rounds {
            cfg.pipeline.rounds = r as usize;
        }
        if let Some(g) = m.gamma {
            cfg.pipeline.gamma = g;
        }
    }
    if let Some(f) = folds {
        cfg.folds = f;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(g) = cfg.pipeline.kernel.gamma_rbf {
        if !(g > 0.0 && g.is_finite()) {
            return usage(format!("RBF width must be positive, got {g}"));
        }
    }
    if cfg.pipeline.kernel.degree == 0 {
        return usage("polynomial degree must be >= 1");
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct ProvenanceRecord<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    /// Seconds since the Unix epoch when the run finished.
    finished_unix: u64,
    seconds: f64,
    outputs: Vec<String>,
}

fn write_provenance(path: &Path, command: &str, cfg: &RunConfig, start: Instant, outputs: &[PathBuf]) -> Result<()> {
    let record = ProvenanceRecord {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        finished_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        seconds: start.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn select(cfg: &RunConfig) -> impl Iterator<Item = (DirectionId, Session)> + '_ {
    DirectionId::all()
        .filter(|d| cfg.direction.is_none_or(|x| x == *d))
        .flat_map(|d| Session::ALL.into_iter().map(move |s| (d, s)))
        .filter(|(_, s)| cfg.session.is_none_or(|x| x == *s))
}

fn load(data: &Path, cfg: &RunConfig) -> CliResult<Vec<LabeledDataset>> {
    let sets = load_datasets(data, cfg.session, cfg.direction)?;
    if sets.is_empty() {
        return Err(Failure::Data(Error::MalformedInput(format!(
            "no matching datasets under {}",
            data.display()
        ))));
    }
    Ok(sets)
}

fn by_session(sets: Vec<LabeledDataset>) -> Vec<Vec<LabeledDataset>> {
    Session::ALL
        .iter()
        .map(|s| sets.iter().filter(|d| d.session == *s).cloned().collect::<Vec<_>>())
        .filter(|v| !v.is_empty())
        .collect()
}

fn run(cli: Cli, out: &mut dyn std::io::Write) -> CliResult<()> {
    let start = Instant::now();
    match cli.command {
        Command::Simulate { common, out: dir } => {
            let cfg = resolve(&common, None, None)?;
            let mut written = Vec::new();
            for (d, s) in select(&cfg) {
                let ds = generate_dataset(d, s, &cfg.sim)?;
                written.push(write_dataset(&dir, &ds)?);
            }
            write_provenance(&dir.join(PROVENANCE_FILE), "simulate", &cfg, start, &written)?;
            writeln!(out, "wrote {} datasets to {}", written.len(), dir.display()).ok();
        }
        Command::Train {
            common,
            model,
            data,
            out: path,
        } => {
            let cfg = resolve(&common, Some(&model), None)?;
            if cfg.session.is_none() {
                return usage("train needs --session am|pm");
            }
            let mut sets = load(&data, &cfg)?;
            if sets.len() > 1 {
                return usage(format!(
                    "{} datasets match; choose one with --direction",
                    sets.len()
                ));
            }
            let ds = sets.remove(0);
            let m = train_ab_svm(&ds, &cfg.pipeline)?;
            save_model(&m, &path)?;
            let prov = path.with_extension("provenance.json");
            write_provenance(&prov, "train", &cfg, start, std::slice::from_ref(&path))?;
            writeln!(
                out,
                "trained {} {} (k = {}, {} support vectors) -> {}",
                ds.direction,
                ds.session,
                m.pca.k,
                m.svm.support_vectors.len(),
                path.display()
            )
            .ok();
        }
        Command::Classify { model, input } => {
            let m = load_model(&model)?;
            for rec in read_signals_csv(&input)? {
                if rec.signal.session != m.session {
                    return Err(Failure::Data(Error::Precondition(format!(
                        "signal is from session {} but the model was trained on {}",
                        rec.signal.session, m.session
                    ))));
                }
                let c = classify_detailed(&m, &rec.signal)?;
                let mut line = format!(
                    "category={} gate_inlier={} gate_outlier={}",
                    c.category.id(),
                    c.gate_scores[0],
                    c.gate_scores[1]
                );
                match &c.svm_scores {
                    Some(scores) => {
                        for (class, v) in m.svm.classes.iter().zip(scores) {
                            write!(line, " svm_{class}={v}").unwrap();
                        }
                    }
                    None => line.push_str(" svm=skipped"),
                }
                writeln!(out, "{line}").ok();
            }
        }
        Command::Evaluate {
            common,
            model,
            data,
            folds,
            report,
        } => {
            let cfg = resolve(&common, Some(&model), folds)?;
            let sets = load(&data, &cfg)?;
            let eval = cfg.eval_config();
            let mut sessions: Vec<SessionReport> = Vec::new();
            for group in by_session(sets) {
                let r = evaluate_session(&group, &eval)?;
                writeln!(
                    out,
                    "{}: average accuracy {:.2}% over {} directions ({:.1} s)",
                    r.session,
                    r.grand_average(),
                    r.directions.len(),
                    r.seconds
                )
                .ok();
                sessions.push(r);
            }
            let written = render_report(&sessions, &[], &report)?;
            write_provenance(&report.join(PROVENANCE_FILE), "evaluate", &cfg, start, &written)?;
        }
        Command::SweepPca {
            common,
            model,
            data,
            dims,
            folds,
            report,
        } => {
            let mut cfg = resolve(&common, Some(&model), folds)?;
            if let Some(spec) = dims {
                cfg.dims = parse_dims(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            let sets = load(&data, &cfg)?;
            let eval = cfg.eval_config();
            let mut curves: Vec<SweepCurve> = Vec::new();
            for group in by_session(sets) {
                let max_dim = group
                    .iter()
                    .map(|d| d.len() - d.len().div_ceil(cfg.folds) - 1)
                    .min()
                    .unwrap_or(CYCLES)
                    .min(CYCLES);
                let grid = clip_dims(&cfg.dims, max_dim);
                let c = sweep_session(&group, &grid, &eval)?;
                writeln!(out, "{}: best PCA dimension {}", c.session, c.best_dim).ok();
                curves.push(c);
            }
            let written = render_report(&[], &curves, &report)?;
            write_provenance(&report.join(PROVENANCE_FILE), "sweep-pca", &cfg, start, &written)?;
        }
    }
    Ok(())
}

/// Runs the CLI on `argv` (program name first), writing results to `out`
/// and diagnostics to standard error; returns the process exit code.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(out, "{e}").ok();
                    EXIT_OK
                }
                _ => {
                    eprint!("{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match run(cli, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("Run with --help for usage.");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_cli_with(argv, &mut lock)
}
