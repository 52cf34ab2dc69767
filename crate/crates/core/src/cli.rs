//! Command-line driver. Exit status: 0 success, 1 usage error, 2 data
//! error, 3 I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::container::{load_model, save_model};
use crate::ensemble::{default_grid, grid_search, EnsembleParams};
use crate::error::{Error, Result};
use crate::ingest::{load_csv, save_csv, Column, LoadOptions, RawTable};
use crate::io::write_atomic;
use crate::metrics::{Averaging, MetricsReport};
use crate::pipeline::{self, SplitConfig};
use crate::tree::{MaxFeatures, Splitter, TreeParams};

#[derive(Debug, Parser)]
#[command(name = "etg", version, about = "Extra-trees attack detection for network flow tables")]
pub struct Cli {
    /// Worker threads for training and prediction (default: all cores).
    #[arg(long, global = true, env = "ETG_THREADS")]
    pub threads: Option<usize>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean, split, encode and standardize a CSV; write the encoded splits.
    Preprocess(PreprocessArgs),
    /// Train a model and write it as a `.etg` file.
    Train(TrainArgs),
    /// Score a model on a labeled CSV.
    Evaluate(EvaluateArgs),
    /// Predict classes for an unlabeled CSV.
    Predict(PredictArgs),
    /// Search ensemble parameters on a validation split.
    Gridsearch(GridArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,

    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,

    /// Read at most this many data rows.
    #[arg(long)]
    pub max_rows: Option<usize>,

    /// Keep only these columns (comma separated; the label is always kept).
    #[arg(long, value_delimiter = ',')]
    pub include: Option<Vec<String>>,

    /// Drop these columns (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
}

impl InputArgs {
    fn load(&self, label: Option<&str>) -> Result<RawTable> {
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidParameter("delimiter must be a single ASCII character".into()));
        }
        let options = LoadOptions {
            label_column: label.map(String::from),
            delimiter: self.delimiter as u8,
            max_rows: self.max_rows,
            include: self.include.clone(),
            exclude: self.exclude.clone(),
        };
        let table = load_csv(&self.input, &options)?;
        log::info!(
            "load: {} rows x {} columns from {}",
            table.row_count(),
            table.column_count(),
            self.input.display()
        );
        Ok(table)
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Name of the target column.
    #[arg(long)]
    pub label: String,

    /// Fraction of cleaned rows used for training.
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,

    /// Seed for the split and the ensemble.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Keep class proportions in both splits.
    #[arg(long)]
    pub stratify: bool,
}

impl SplitArgs {
    fn config(&self) -> SplitConfig {
        SplitConfig {
            train_fraction: self.train_fraction,
            seed: self.seed,
            stratified: self.stratify,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitterArg {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AveragingArg {
    Weighted,
    Macro,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::Weighted => Averaging::Weighted,
            AveragingArg::Macro => Averaging::Macro,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    /// Number of trees.
    #[arg(long, default_value_t = 100)]
    pub trees: usize,

    /// Maximum tree depth (unbounded when omitted).
    #[arg(long)]
    pub max_depth: Option<usize>,

    /// Features drawn per node: `sqrt`, `all`, or a count.
    #[arg(long, default_value = "sqrt")]
    pub max_features: MaxFeatures,

    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,

    #[arg(long, default_value_t = 1)]
    pub min_samples_leaf: usize,

    /// Threshold search: exhaustive midpoints or one random threshold.
    #[arg(long, value_enum, default_value_t = SplitterArg::Best)]
    pub splitter: SplitterArg,

    /// Train each tree on a bootstrap sample.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub bootstrap: Toggle,
}

impl ForestArgs {
    fn params(&self, seed: u64) -> EnsembleParams {
        EnsembleParams {
            n_trees: self.trees,
            tree: TreeParams {
                max_features: self.max_features,
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
                min_samples_leaf: self.min_samples_leaf,
                splitter: match self.splitter {
                    SplitterArg::Best => Splitter::Best,
                    SplitterArg::Random => Splitter::Random,
                },
            },
            bootstrap: self.bootstrap == Toggle::On,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Directory for train.csv, test.csv and preprocess.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Model output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Run report path (default: `<out>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the cleaned, untransformed test rows to this CSV.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
    pub averaging: AveragingArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    /// Directory for metrics.json, metrics.txt and confusion.csv.
    #[arg(long, default_value = "evaluation")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
    pub averaging: AveragingArg,
    /// Format of the summary printed to stdout.
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Candidate tree counts (default 50,100,200).
    #[arg(long, value_delimiter = ',')]
    pub grid_trees: Vec<usize>,
    /// Candidate depths, `none` for unbounded (default none,20).
    #[arg(long, value_delimiter = ',')]
    pub grid_depth: Vec<String>,
    /// Candidate per-node feature counts (default sqrt,all).
    #[arg(long, value_delimiter = ',')]
    pub grid_features: Vec<MaxFeatures>,
    /// Share of the training rows held out for validation.
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    /// Directory for grid_results.csv, grid_results.json and best_params.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_bytes(path: &Path, rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.write_record(&row).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    wtr.into_inner().map_err(|e| Error::io(path, e.into_error()))
}

/// Encoded feature matrix plus decoded label as a table.
fn encoded_table(
    x: &crate::matrix::FeatureMatrix,
    y: &[usize],
    names: &[String],
    label: &str,
    classes: &[String],
) -> Result<RawTable> {
    let mut cols: Vec<(String, Column)> = names
        .iter()
        .enumerate()
        .map(|(f, n)| (n.clone(), Column::Numeric(x.column(f).iter().map(|&v| Some(v)).collect())))
        .collect();
    cols.push((
        label.to_string(),
        Column::Categorical(y.iter().map(|&c| Some(classes[c].clone())).collect()),
    ));
    RawTable::new(cols, Some(label.to_string()))
}

fn cmd_preprocess(args: &PreprocessArgs) -> Result<()> {
    let table = args.input.load(Some(&args.split.label))?;
    let prepared = pipeline::prepare(&table, &args.split.config())?;
    ensure_dir(&args.out_dir)?;
    let pre = &prepared.preprocess;
    let classes = pre.classes();
    let train = encoded_table(&prepared.train_x, &prepared.train_y, &pre.feature_names, &pre.label_column, classes)?;
    let test = encoded_table(&prepared.test_x, &prepared.test_y, &pre.feature_names, &pre.label_column, classes)?;
    save_csv(&train, args.out_dir.join("train.csv"))?;
    save_csv(&test, args.out_dir.join("test.csv"))?;

    #[derive(Serialize)]
    struct Out<'a> {
        clean: crate::preprocess::CleanReport,
        train_rows: usize,
        test_rows: usize,
        preprocess: &'a crate::preprocess::PreprocessModel,
    }
    write_atomic(
        args.out_dir.join("preprocess.json"),
        &json(&Out {
            clean: prepared.clean_report,
            train_rows: prepared.train_y.len(),
            test_rows: prepared.test_y.len(),
            preprocess: pre,
        }),
    )?;
    println!(
        "wrote {} train and {} test rows to {}",
        prepared.train_y.len(),
        prepared.test_y.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let table = args.input.load(Some(&args.split.label))?;
    let params = args.forest.params(args.split.seed);
    let outcome = pipeline::train(&table, &args.split.config(), &params, args.averaging.into())?;
    save_model(&outcome.model, &args.out)?;
    log::info!("model written to {}", args.out.display());

    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".report.json");
        PathBuf::from(p)
    });
    write_atomic(&report_path, &json(&outcome.summary))?;

    if let Some(test_out) = &args.test_out {
        let test = outcome.prepared.cleaned.select_rows(&outcome.prepared.split.test_indices);
        save_csv(&test, test_out)?;
    }

    println!("seed {}", params.seed);
    println!(
        "trained {} trees on {} rows ({} features, {} classes)",
        params.n_trees,
        outcome.summary.train_rows,
        outcome.summary.n_features,
        outcome.summary.classes.len()
    );
    if let Some(m) = &outcome.summary.test_metrics {
        println!("held-out test metrics ({} rows):", outcome.summary.test_rows);
        print!("{}", m.headline());
    }
    Ok(())
}

fn write_metrics(dir: &Path, report: &MetricsReport, classes: &[String]) -> Result<()> {
    ensure_dir(dir)?;
    write_atomic(dir.join("metrics.json"), report.to_json().as_bytes())?;
    write_atomic(dir.join("metrics.txt"), report.to_text().as_bytes())?;
    if let Some(cm) = &report.confusion {
        write_atomic(dir.join("confusion.csv"), cm.to_csv(classes).as_bytes())?;
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let label = model
        .preprocess()
        .map(|p| p.label_column.clone())
        .ok_or_else(|| Error::Format("model carries no preprocess section".into()))?;
    let table = args.input.load(Some(&label))?;
    let eval = pipeline::evaluate(&model, &table, args.averaging.into())?;
    write_metrics(&args.out_dir, &eval.report, model.classes())?;
    match args.format {
        ReportFormat::Text => {
            println!("seed {}", model.params().seed);
            println!("evaluated {} rows ({} dropped)", eval.rows_evaluated, eval.rows_dropped);
            print!("{}", eval.report.headline());
        }
        ReportFormat::Json => println!("{}", eval.report.to_json()),
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let table = args.input.load(None)?;
    let preds = pipeline::predict(&model, &table)?;
    let path = args.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let header = vec!["predicted_class".to_string(), "confidence".to_string()];
    let rows = std::iter::once(header).chain(
        preds
            .iter()
            .map(|p| vec![p.predicted_class.clone(), p.confidence.to_string()]),
    );
    let bytes = csv_bytes(&path, rows)?;
    match &args.out {
        Some(out) => write_atomic(out, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

fn parse_depth(s: &str) -> Result<Option<usize>> {
    match s {
        "none" | "unbounded" => Ok(None),
        _ => s
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("invalid depth `{s}`"))),
    }
}

fn build_grid(args: &GridArgs) -> Result<Vec<EnsembleParams>> {
    let base = args.forest.params(args.split.seed);
    let defaults = default_grid(&base);
    let mut trees: Vec<usize> = args.grid_trees.clone();
    if trees.is_empty() {
        trees = defaults.iter().map(|p| p.n_trees).collect();
        trees.dedup();
    }
    let mut depths: Vec<Option<usize>> = args
        .grid_depth
        .iter()
        .map(|s| parse_depth(s))
        .collect::<Result<_>>()?;
    if depths.is_empty() {
        depths = vec![None, Some(20)];
    }
    let mut features = args.grid_features.clone();
    if features.is_empty() {
        features = vec![MaxFeatures::Sqrt, MaxFeatures::All];
    }
    let mut grid = Vec::new();
    for &n_trees in &trees {
        for &max_depth in &depths {
            for &max_features in &features {
                grid.push(EnsembleParams {
                    n_trees,
                    tree: TreeParams {
                        max_depth,
                        max_features,
                        ..base.tree
                    },
                    ..base
                });
            }
        }
    }
    Ok(grid)
}

fn cmd_gridsearch(args: &GridArgs) -> Result<()> {
    let grid = build_grid(args)?;
    let table = args.input.load(Some(&args.split.label))?;
    let prepared = pipeline::prepare(&table, &args.split.config())?;
    let result = grid_search(
        &prepared.train_x,
        &prepared.train_y,
        prepared.n_classes(),
        &grid,
        args.validation_fraction,
        args.split.seed,
    )?;
    ensure_dir(&args.out_dir)?;
    let csv_path = args.out_dir.join("grid_results.csv");
    let header = ["n_trees", "max_depth", "max_features", "validation_accuracy"]
        .map(String::from)
        .to_vec();
    let rows = std::iter::once(header).chain(result.rows.iter().map(|r| {
        vec![
            r.params.n_trees.to_string(),
            r.params.tree.max_depth.map_or_else(|| "none".into(), |d| d.to_string()),
            r.params.tree.max_features.to_string(),
            r.validation_accuracy.to_string(),
        ]
    }));
    write_atomic(&csv_path, &csv_bytes(&csv_path, rows)?)?;
    write_atomic(args.out_dir.join("grid_results.json"), &json(&result))?;
    write_atomic(args.out_dir.join("best_params.json"), &json(&result.best))?;

    println!("seed {}", args.split.seed);
    println!(
        "{} candidates, {} train / {} validation rows (grid values are this tool's defaults unless given)",
        result.rows.len(),
        result.train_rows,
        result.validation_rows
    );
    println!(
        "best: trees={} max_depth={} max_features={} validation_accuracy={:.6}",
        result.best.n_trees,
        result.best.tree.max_depth.map_or_else(|| "none".into(), |d| d.to_string()),
        result.best.tree.max_features,
        result.best_accuracy
    );
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let run = || match &cli.command {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Gridsearch(a) => cmd_gridsearch(a),
    };
    match cli.threads {
        Some(0) => Err(Error::InvalidParameter("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("etg: error: {e}");
            e.exit_code()
        }
    }
}
