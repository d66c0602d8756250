//! Command-line front end for the `finsler-core` workbench.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod model;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{EXIT_ERROR, EXIT_OK};
use crate::suites::SuiteName;

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "Finsler and Minkowski geometry workbench")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options every subcommand accepts.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Global seed (default 0, or the config's seed for `run`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Primary tolerance, replacing the command's default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Sample count, replacing the command's default.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// OBJ mesh (n = 3) or CSV polyline (n = 2), plus an invariant table.
    Geometry,
    /// Invariant table only, any dimension.
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List built-in norms, metrics and suites.
    Catalog,
    /// Print every curvature quantity at one point of the slit tangent bundle.
    Invariants {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        dim: Option<usize>,
        /// Base point, comma-separated; defaults to the domain center.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Decide Riemannian, Berwald, Landsberg and weak Landsberg on a sample grid.
    Classify {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Parallel-transport a vector along a curve and write the trajectory CSV.
    Transport {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        dim: Option<usize>,
        /// Segment start point.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "curve")]
        from: Option<String>,
        /// Segment end point.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "curve")]
        to: Option<String>,
        /// Curve as JSON text or a path to a JSON file.
        #[arg(long)]
        curve: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y0: String,
        /// Final curve parameter in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a linear map relating two norms.
    Equiv {
        #[arg(long)]
        norm1: String,
        #[arg(long)]
        norm2: String,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Run one verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteName,
        #[arg(long)]
        metric: Vec<String>,
        #[arg(long)]
        norm: Vec<String>,
        #[arg(long)]
        dim: Option<usize>,
        /// Write the suite report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the suites selected by a config file and write the report.
    Run { config: PathBuf },
    /// Export the indicatrix of a norm.
    Export {
        #[arg(long)]
        norm: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 2)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = ExportFormat::Geometry)]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match commands::execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
