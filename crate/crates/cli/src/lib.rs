//! The `figharvest` command line: one binary, one subcommand per pipeline stage.
//!
//! Every subcommand prints a report, as JSON with `--format json` or as a
//! short human summary otherwise. Exit status is 0 on success, 1 for invalid
//! arguments or data, 2 when a file or socket cannot be used.

pub mod commands;
pub mod config;
pub mod error;
pub mod server;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{PipelineConfig, CONFIG_ENV};
use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "figharvest", version, about = "Synthesize, detect, evaluate, curate and catalog figures and tables")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads for parallel stages (default: one per logical CPU).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compose labelled pseudo-paper pages.
    Synth(SynthArgs),
    /// Run a detector over page rasters.
    Detect(DetectArgs),
    /// Match predictions against ground truth.
    Eval(EvalArgs),
    /// Curation sessions: create, serve, diff, summarize, export.
    #[command(subcommand)]
    Curate(CurateCommand),
    /// Paper/image catalog: ingest, query, stats, serve.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// synth -> baseline detect -> eval in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Asset manifest (JSONL of id, category, path).
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// Without --assets: draw this many procedural assets per category.
    #[arg(long, default_value_t = 3)]
    pub procedural: usize,
    #[arg(long, default_value_t = 10)]
    pub pages: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Page spec TOML; replaces the config's [synth] section.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory (default: paths.corpus).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Directory of page rasters (default: paths.corpus).
    #[arg(long)]
    pub pages: Option<PathBuf>,
    /// Predictions JSONL to write (default: paths.predictions).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// External detector command with {page} and {out} placeholders;
    /// the connected-component baseline runs when absent.
    #[arg(long)]
    pub adapter: Option<String>,
    #[arg(long)]
    pub detector_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth labels JSONL (default: paths.labels).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Predictions JSONL (default: paths.predictions).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub iou: Option<f64>,
    #[arg(long)]
    pub no_multibox: bool,
    /// Match regardless of figure/table class.
    #[arg(long)]
    pub ignore_class: bool,
    /// Count a class error as one relabel rather than a removal and an addition.
    #[arg(long)]
    pub relabel_only: bool,
    #[arg(long)]
    pub exact_tolerance: Option<f64>,
    /// Also write the full per-page report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CurateCommand {
    /// Create a session from machine predictions.
    Init(CurateInitArgs),
    /// Serve the curation HTTP API.
    Serve(CurateServeArgs),
    /// Compare machine and curated label files.
    Diff(CurateDiffArgs),
    /// Corpus-wide statistics over a session store.
    Stats(StoreArgs),
    /// Write curated labels of every session as labels JSONL.
    Export(CurateExportArgs),
}

#[derive(Debug, Args)]
pub struct StoreArgs {
    /// Session store directory (default: paths.store).
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurateInitArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Page rasters, for page sizes (default: paths.corpus).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "corpus")]
    pub doc_id: String,
    #[arg(long)]
    pub year: Option<i32>,
}

#[derive(Debug, Args)]
pub struct CurateServeArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long)]
    pub port: Option<u16>,
    /// Corpus directory to serve page rasters from.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurateDiffArgs {
    #[arg(long)]
    pub machine: PathBuf,
    #[arg(long)]
    pub curated: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurateExportArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Build a catalog from papers and images files (CSV/TSV or JSONL).
    Ingest(CatalogIngestArgs),
    /// Faceted search.
    Query(CatalogQueryArgs),
    /// Counts per year and venue.
    Stats(CatalogStatsArgs),
    /// Serve the navigator HTTP API.
    Serve(CatalogServeArgs),
}

#[derive(Debug, Args)]
pub struct CatalogPath {
    /// Catalog file written by `catalog ingest` (default: paths.catalog).
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogIngestArgs {
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    /// Where to write the catalog (default: paths.catalog).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogQueryArgs {
    #[command(flatten)]
    pub catalog: CatalogPath,
    #[arg(long)]
    pub terms: Option<String>,
    /// author_keywords or title_and_abstract.
    #[arg(long)]
    pub mode: Option<String>,
    /// Author names; separate several with `;`.
    #[arg(long)]
    pub authors: Option<String>,
    /// Comma-separated venues.
    #[arg(long)]
    pub venues: Option<String>,
    #[arg(long)]
    pub year_from: Option<i32>,
    #[arg(long)]
    pub year_to: Option<i32>,
    /// figure, table or both.
    #[arg(long = "type")]
    pub image_type: Option<String>,
    #[arg(long)]
    pub stem: bool,
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CatalogStatsArgs {
    #[command(flatten)]
    pub catalog: CatalogPath,
    /// Group keys: year, venue, both (`year,venue`) or none (``).
    #[arg(long, default_value = "year,venue")]
    pub group: String,
}

#[derive(Debug, Args)]
pub struct CatalogServeArgs {
    #[command(flatten)]
    pub catalog: CatalogPath,
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 20)]
    pub pages: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Asset manifest; procedural assets are drawn when absent.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// Keep corpus, predictions and report here (default: a scratch directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    1
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = PipelineConfig::resolve(cli.config.as_deref())?;
    let workers = cli.workers.unwrap_or(config.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(format!("worker pool: {e}")))?;
    let report = pool.install(|| commands::dispatch(&cli.command, &config, workers))?;
    let rendered = match cli.format {
        Format::Json => serde_json::to_string_pretty(&report.json).expect("serializes") + "\n",
        Format::Text => report.text,
    };
    out.write_all(rendered.as_bytes()).map_err(|e| CliError::io("stdout", e))
}
