//! `dbarcode` command-line front end.
//!
//! Exit codes: 0 success, 1 data or I/O error, 2 usage or configuration error.

pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dbarcode_core::pipeline::format_results;
use dbarcode_core::store::write_atomic;
use dbarcode_core::{
    binarize_matrix, evaluate, explained_variance_ratio, generate, labels_from_results,
    load_features, load_labels, load_pca, pca_fit, pca_transform, save_barcodes, save_features,
    save_labels, save_pca, BinarizationMethod, DistanceMetric, FeatureMatrix, LabelVector,
    SearchConfig, SearchEngine, SearchMode, SyntheticSpec,
};
use thiserror::Error;

use manifest::{FileDigest, Inputs, RunManifest, Timings, MANIFEST_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dbarcode_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_config() => 2,
            _ => 1,
        }
    }
}

/// Attaches the offending path to core errors raised while reading a file.
fn at_path(path: &Path) -> impl FnOnce(dbarcode_core::Error) -> CliError + '_ {
    move |e| match e {
        dbarcode_core::Error::Io(source) => CliError::io(path, source),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dbarcode",
    version,
    about = "Binary barcodes and two-stage retrieval over embedding files"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a feature file into a barcode file.
    Binarize(BinarizeArgs),
    /// Fit or apply a PCA model.
    #[command(subcommand)]
    Pca(PcaCommand),
    /// Run a retrieval experiment and evaluate it.
    Search(SearchArgs),
    /// Re-run the search recorded in a manifest after checking input digests.
    Replay(ReplayArgs),
    /// Write a labeled synthetic train/test set.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Minmax,
    Zerothresh,
}

impl From<MethodArg> for BinarizationMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Minmax => BinarizationMethod::MinMax,
            MethodArg::Zerothresh => BinarizationMethod::ZeroThreshold,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    L1,
    L2,
}

impl From<MetricArg> for DistanceMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L1 => DistanceMetric::L1,
            MetricArg::L2 => DistanceMetric::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Realvalued,
    Reducedreal,
    Barcodeonly,
    Twostage,
    Reducedbarcode,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Realvalued => SearchMode::RealValued,
            ModeArg::Reducedreal => SearchMode::ReducedReal,
            ModeArg::Barcodeonly => SearchMode::BarcodeOnly,
            ModeArg::Twostage => SearchMode::TwoStage,
            ModeArg::Reducedbarcode => SearchMode::ReducedBarcode,
        }
    }
}

#[derive(Debug, Args)]
pub struct BinarizeArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PcaCommand {
    /// Fit a model on training features.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Number of components (N_PCA).
        #[arg(long, visible_alias = "n-pca")]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project features with a fitted model.
    Transform {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub train_labels: PathBuf,
    #[arg(long)]
    pub test_labels: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "l1")]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value = "minmax")]
    pub method: MethodArg,
    /// Stage-1 candidate count N.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Principal components for the reduced modes (N_PCA).
    #[arg(long = "n-pca", visible_alias = "k")]
    pub n_pca: Option<usize>,
    /// Directory for results.txt, report.txt and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            mode: self.mode.into(),
            metric: self.metric.into(),
            method: self.method.into(),
            n_candidates: self.n,
            n_pca: self.n_pca,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the re-run outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 24)]
    pub classes: usize,
    #[arg(long, default_value_t = 50)]
    pub per_class: usize,
    #[arg(long, default_value_t = 5)]
    pub test_per_class: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for train.dft, train.labels, test.dft and test.labels.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Binarize(args) => cmd_binarize(&args),
        Command::Pca(cmd) => cmd_pca(&cmd),
        Command::Search(args) => cmd_search(&args).map(|_| ()),
        Command::Replay(args) => cmd_replay(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn read_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    load_features(path).map_err(at_path(path))
}

fn read_labels(path: &Path) -> Result<LabelVector, CliError> {
    load_labels(path).map_err(at_path(path))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn cmd_binarize(args: &BinarizeArgs) -> Result<(), CliError> {
    let features = read_features(&args.input)?;
    let codes = binarize_matrix(&features, args.method.into())?;
    save_barcodes(&codes, &args.out)?;
    println!(
        "rows={} bits_per_row={}",
        codes.rows(),
        codes.bits_per_row()
    );
    Ok(())
}

pub fn cmd_pca(cmd: &PcaCommand) -> Result<(), CliError> {
    match cmd {
        PcaCommand::Fit { input, k, out } => {
            let train = read_features(input)?;
            let model = pca_fit(&train, *k)?;
            save_pca(&model, out)?;
            let captured: f64 = explained_variance_ratio(&model).iter().sum();
            println!(
                "d={} k={} explained_variance={:.6}",
                model.dim(),
                model.components(),
                captured
            );
        }
        PcaCommand::Transform { model, input, out } => {
            let model = load_pca(model).map_err(at_path(model))?;
            let features = read_features(input)?;
            let reduced = pca_transform(&model, &features)?;
            save_features(&reduced, out)?;
            println!("rows={} cols={}", reduced.rows(), reduced.cols());
        }
    }
    Ok(())
}

pub struct SearchOutputs {
    pub results: PathBuf,
    pub report: PathBuf,
    pub manifest: PathBuf,
}

fn check_labels(labels: &LabelVector, rows: usize, path: &Path) -> Result<(), CliError> {
    if labels.len() != rows {
        return Err(CliError::Data(format!(
            "{}: {} labels for {rows} feature rows",
            path.display(),
            labels.len()
        )));
    }
    Ok(())
}

pub fn cmd_search(args: &SearchArgs) -> Result<SearchOutputs, CliError> {
    let config = args.config();
    config.validate()?;
    run_search_to(
        config,
        &args.train,
        &args.test,
        &args.train_labels,
        &args.test_labels,
        &args.out_dir,
    )
}

fn run_search_to(
    config: SearchConfig,
    train_path: &Path,
    test_path: &Path,
    train_labels_path: &Path,
    test_labels_path: &Path,
    out_dir: &Path,
) -> Result<SearchOutputs, CliError> {
    let start = Instant::now();
    let train = read_features(train_path)?;
    let test = read_features(test_path)?;
    let train_labels = read_labels(train_labels_path)?;
    let test_labels = read_labels(test_labels_path)?;
    check_labels(&train_labels, train.rows(), train_labels_path)?;
    check_labels(&test_labels, test.rows(), test_labels_path)?;
    config.validate_for(&train, &test)?;
    let loaded = Instant::now();

    let engine = SearchEngine::build(&train, config)?;
    let results = engine.search(&test)?;
    let searched = Instant::now();

    let retrieved = labels_from_results(&results, &train_labels)?;
    let report = evaluate(&test_labels, &retrieved)?;
    let evaluated = Instant::now();

    ensure_dir(out_dir)?;
    let outputs = SearchOutputs {
        results: out_dir.join("results.txt"),
        report: out_dir.join("report.txt"),
        manifest: out_dir.join("manifest.json"),
    };
    write_atomic(&outputs.results, format_results(&results).as_bytes())?;
    write_atomic(&outputs.report, report.to_kv().as_bytes())?;

    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    let manifest = RunManifest {
        version: MANIFEST_VERSION,
        config,
        inputs: Inputs {
            train_features: FileDigest::of(train_path)?,
            test_features: FileDigest::of(test_path)?,
            train_labels: FileDigest::of(train_labels_path)?,
            test_labels: FileDigest::of(test_labels_path)?,
        },
        results: FileDigest::of(&outputs.results)?,
        report: FileDigest::of(&outputs.report)?,
        timings: Timings {
            load_ms: ms(start, loaded),
            search_ms: ms(loaded, searched),
            evaluate_ms: ms(searched, evaluated),
            total_ms: ms(start, Instant::now()),
        },
    };
    write_atomic(&outputs.manifest, manifest.to_json().as_bytes())?;

    println!(
        "mode={} metric={} method={} n={} n_pca={}",
        config.mode,
        config.metric,
        config.method,
        config.n_candidates,
        config.n_pca.map_or("-".to_string(), |k| k.to_string())
    );
    print!("{}", report.to_text());
    println!("results  {}", outputs.results.display());
    println!("report   {}", outputs.report.display());
    println!("manifest {}", outputs.manifest.display());
    Ok(outputs)
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<(), CliError> {
    let recorded = RunManifest::load(&args.manifest)?;
    recorded.verify_inputs()?;
    let i = &recorded.inputs;
    let outputs = run_search_to(
        recorded.config,
        &i.train_features.path,
        &i.test_features.path,
        &i.train_labels.path,
        &i.test_labels.path,
        &args.out_dir,
    )?;
    let results = FileDigest::of(&outputs.results)?;
    let report = FileDigest::of(&outputs.report)?;
    if results.sha256 != recorded.results.sha256 || report.sha256 != recorded.report.sha256 {
        return Err(CliError::Data(
            "replayed outputs differ from the recorded run".into(),
        ));
    }
    println!("replay matches recorded results and report");
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        classes: args.classes,
        per_class: args.per_class,
        test_per_class: args.test_per_class,
        dim: args.dim,
        separation: args.separation,
        seed: args.seed,
    };
    let data = generate(&spec)?;
    ensure_dir(&args.out_dir)?;
    save_features(&data.train, args.out_dir.join("train.dft"))?;
    save_labels(&data.train_labels, args.out_dir.join("train.labels"))?;
    save_features(&data.test, args.out_dir.join("test.dft"))?;
    save_labels(&data.test_labels, args.out_dir.join("test.labels"))?;
    println!(
        "train={}x{} test={}x{} classes={}",
        data.train.rows(),
        data.train.cols(),
        data.test.rows(),
        data.test.cols(),
        spec.classes
    );
    Ok(())
}
