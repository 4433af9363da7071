//! Command-line front end: argument parsing, commands and run manifests.
//!
//! Exit codes: 0 success, 2 usage error (from clap), 3 unreadable or
//! malformed input, 4 pipeline failure, 5 output could not be written.

pub mod args;
pub mod commands;
pub mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};

pub use args::{Cli, Command};

pub const EXIT_INPUT: i32 = 3;
pub const EXIT_PIPELINE: i32 = 4;
pub const EXIT_OUTPUT: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    /// Input missing, unreadable or not a valid PLY.
    Input(String),
    /// The pipeline rejected the data or the configuration.
    Pipeline(String),
    /// Writing results failed.
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Pipeline(_) => EXIT_PIPELINE,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }

    pub(crate) fn input(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    pub(crate) fn output(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Output(format!("{}: {e}", path.display()))
    }

    pub(crate) fn pipeline(what: impl fmt::Display, e: fgbd_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(format!("{what}: {e}"))
        } else {
            CliError::Pipeline(format!("{what}: {e}"))
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Pipeline(m) => write!(f, "pipeline error: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Runs one parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> CliResult<()> {
    match &cli.command {
        Command::Denoise(a) => commands::denoise(a, out),
        Command::AddNoise(a) => commands::add_noise(a, out),
        Command::EstimateNoise(a) => commands::estimate_noise(a, out),
        Command::Psnr(a) => commands::psnr(a, out),
        Command::GenSynthetic(a) => commands::gen_synthetic(a, out),
        Command::BenchGraph(a) => commands::bench_graph(a, out),
    }
}

/// `*.ply` files of a directory in lexicographic filename order.
pub fn list_frames(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::input(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::input(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x.eq_ignore_ascii_case("ply")) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(CliError::Input(format!("{}: no .ply files", dir.display())));
    }
    Ok(files)
}
