//! Command-line surface of the `acev` segmenter: dataset ingestion,
//! configuration layering, label and report output, scene generation and
//! parameter sweeps.

pub mod commands;
pub mod dataset;
pub mod error;
pub mod output;
pub mod report;
pub mod settings;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use dataset::{load_dataset, ColumnRef, Dataset, DatasetFile};
pub use error::{CliError, Result};
pub use report::RunReport;
pub use settings::ConfigFlags;

#[derive(Debug, Parser)]
#[command(
    name = "acev",
    version,
    about = "Segment point clouds into intersecting manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run both stages and write per-point labels plus a JSON report.
    Segment(SegmentArgs),
    /// Count and split the non-intersecting components only.
    Components(ComponentsArgs),
    /// Score two label files against each other (ARI and NMI).
    Eval(EvalArgs),
    /// Write a synthetic scene with truth and intersection-mask columns.
    Gen(GenArgs),
    /// Score a grid of parameter settings against the label column.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV file.
    pub input: PathBuf,
    /// Field delimiter (a single byte).
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    pub delimiter: u8,
    /// The first row holds column names.
    #[arg(long)]
    pub has_header: bool,
    /// Ground-truth column (name or 0-based index), excluded from coordinates.
    #[arg(long, value_name = "COL")]
    pub label_col: Option<String>,
    /// Intersection-mask column (name or 0-based index) of 0/1 flags, excluded from coordinates.
    #[arg(long, value_name = "COL")]
    pub mask_col: Option<String>,
}

impl InputArgs {
    pub fn dataset_file(&self) -> DatasetFile {
        DatasetFile {
            path: self.input.clone(),
            delimiter: self.delimiter,
            has_header: self.has_header,
            label_column: self.label_col.as_deref().map(ColumnRef::parse),
            mask_column: self.mask_col.as_deref().map(ColumnRef::parse),
        }
    }
}

fn parse_delimiter(s: &str) -> std::result::Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!(
            "delimiter must be a single ASCII character, got {s:?}"
        )),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Labels CSV (index,component,manifold); `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out_labels: PathBuf,
    /// JSON report; `-` for standard output.
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ComponentsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Component labels CSV (index,component).
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    pub labels_a: PathBuf,
    pub labels_b: PathBuf,
    /// Label column of the first file (name or 0-based index) [default: last column].
    #[arg(long)]
    pub col_a: Option<String>,
    /// Label column of the second file [default: last column].
    #[arg(long)]
    pub col_b: Option<String>,
    /// Both files start with a header row. A labels CSV written by `segment`
    /// is recognized without this flag.
    #[arg(long)]
    pub has_header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// One of: plane, s-curve, line, plane-plane, plane-s-curve, s-curve-line, four-part.
    pub scene: String,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Gaussian noise per coordinate.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',')]
    pub sweep_k: Vec<usize>,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',')]
    pub sweep_alpha: Vec<f64>,
    /// Comma-separated warm-up fractions.
    #[arg(long, value_delimiter = ',')]
    pub sweep_warmup_frac: Vec<f64>,
    /// Comma-separated inclusion tolerances.
    #[arg(long, value_delimiter = ',')]
    pub sweep_angle_tol: Vec<f64>,
    /// Output CSV; `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment(a) => commands::segment(&a),
        Command::Components(a) => commands::components(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Sweep(a) => commands::sweep(&a),
    }
}

/// Parses `args` (program name first), runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
