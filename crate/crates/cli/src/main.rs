//! `gradecast` command-line front end.
//!
//! Exit codes: 0 on success, 2 for file, parse, cleaning and model errors,
//! 64 for invalid flags or arguments.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use gradecast::Criterion;

pub const EXIT_FAILURE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "gradecast",
    version,
    about = "Predict course pass/fail outcomes from prelim and midterm scores"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a class-record export and report what was dropped
    Clean(CleanArgs),
    /// Split, fit a tree on the training fold and score it on the test fold
    Train(TrainArgs),
    /// Score a saved model on a dataset's test fold (or every record)
    Evaluate(EvaluateArgs),
    /// Predict one student's outcome
    Predict(PredictArgs),
    /// Smallest score increases that flip a predicted fail to pass
    Whatif(WhatIfArgs),
    /// Write a saved model as Graphviz DOT
    ExportDot(ExportDotArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Class-record CSV (nine-column export or a cleaned file)
    #[arg(long, short)]
    pub input: PathBuf,
    /// Accept scores outside 0-100
    #[arg(long)]
    pub no_range_check: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Share of records held out for testing
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep file order instead of shuffling before the split
    #[arg(long)]
    pub no_shuffle: bool,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the cleaned records here
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value = "gini", value_parser = parse_criterion)]
    pub criterion: Criterion,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    #[arg(long, default_value_t = 1)]
    pub min_samples_leaf: usize,
    /// Model file to write
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the tree as Graphviz DOT
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Score every record instead of the test fold
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Args)]
#[group(id = "vector", required = true, multiple = false)]
pub struct VectorArgs {
    /// Feature values in model order; repeat the flag or separate with commas
    #[arg(
        long = "feature",
        short = 'f',
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub features: Vec<f64>,
    /// CSV file holding one student's scores
    #[arg(long)]
    pub input_row: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[command(flatten)]
    pub vector: VectorArgs,
    /// Print the prediction as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct WhatIfArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[command(flatten)]
    pub vector: VectorArgs,
    /// Grid spacing in score points
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Highest reachable score: one value for every feature, or one per feature
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub caps: Vec<f64>,
    /// 1 for single-criterion advice, 2 to include pairs
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    /// Features the student can change, by name or index (default: all)
    #[arg(long, value_delimiter = ',')]
    pub mutable: Vec<String>,
    /// Print the full report as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExportDotArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Output file (default: standard output)
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = gradecast_service::DATA_DIR_ENV, default_value = gradecast_service::DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
    #[arg(long, env = gradecast_service::ADDR_ENV, default_value = gradecast_service::DEFAULT_ADDR)]
    pub addr: std::net::SocketAddr,
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    s.parse()
        .map_err(|e: gradecast::cart::CartError| e.to_string())
}

fn main() -> ExitCode {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
