//! `synthscene`: scene authoring, traversal and axis clip generation, and
//! evaluation from the command line. Every command writes files and exits
//! 0, or prints one JSON error object on stderr and exits 2.

mod commands;
mod config;
mod demo;
mod evaluate;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::LazyLock;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde_json::json;
use synthscene_core::labels::LabelError;
use synthscene_core::scene::SceneError;
use synthscene_core::trajectory::TrajectoryError;
use thiserror::Error;

use config::Settings;

static VERSION: LazyLock<String> =
    LazyLock::new(|| format!("{} (data format {})", env!("CARGO_PKG_VERSION"), synthscene_core::DATA_FORMAT_VERSION));

#[derive(Parser, Debug)]
#[command(name = "synthscene", version = VERSION.as_str(), about = "Synthetic indoor scene datasets with full labels")]
struct Cli {
    /// Worker threads for rendering and metrics (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scene files.
    #[command(subcommand)]
    Scene(SceneCmd),
    /// Insert or modify an object so a predicate holds.
    Sample(commands::SampleArgs),
    /// Plan a full-scene traversal camera path.
    Trajectory(commands::TrajectoryArgs),
    /// Render a traversal clip with all labels.
    Render(commands::RenderArgs),
    /// Single-factor clip batches.
    #[command(subcommand)]
    Axis(AxisCmd),
    /// Metrics over a generated dataset.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// End-to-end demonstrations.
    #[command(subcommand)]
    Demo(DemoCmd),
}

#[derive(Subcommand, Debug)]
enum SceneCmd {
    /// Build a template scene and randomize it.
    Gen(commands::SceneGenArgs),
}

#[derive(Subcommand, Debug)]
enum AxisCmd {
    /// Generate a batch of clips along one axis.
    Gen(commands::AxisGenArgs),
}

#[derive(Subcommand, Debug)]
enum EvalCmd {
    /// Target-only AP of detector predictions.
    Ap(evaluate::ApArgs),
    /// Depth errors of predicted depth rasters.
    Depth(evaluate::DepthArgs),
    /// Point cloud reconstruction scores of predicted depth.
    Recon(evaluate::ReconArgs),
    /// Binned AP along the dataset's axis, as CSV.
    AxisCurve(evaluate::CurveArgs),
}

#[derive(Subcommand, Debug)]
enum DemoCmd {
    /// Generate all five axes, run the mock detector and recover AP curves.
    Trends(demo::TrendsArgs),
}

/// An input file that is missing or malformed.
#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid {path}: {msg}")]
    Invalid { path: String, msg: String },
}

impl FileError {
    pub fn invalid(path: &Path, msg: impl Display) -> Self {
        FileError::Invalid {
            path: path.display().to_string(),
            msg: msg.to_string(),
        }
    }

    fn path(&self) -> &str {
        match self {
            FileError::Read { path, .. } | FileError::Invalid { path, .. } => path,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// Fails with a [`FileError`] unless `path` exists.
pub fn require_path(path: &Path) -> Result<(), FileError> {
    std::fs::metadata(path).map(|_| ()).map_err(|source| FileError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// Error kind and offending path for the JSON error report.
fn classify(err: &anyhow::Error) -> (&'static str, Option<String>) {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<FileError>() {
            let kind = match f {
                FileError::Read { source, .. } if source.kind() == std::io::ErrorKind::NotFound => "not_found",
                FileError::Read { .. } => "io",
                FileError::Invalid { .. } => "invalid_input",
            };
            return (kind, Some(f.path().to_string()));
        }
        if let Some(LabelError::Io { path, .. } | LabelError::Parse { path, .. }) = cause.downcast_ref::<LabelError>() {
            return ("io", Some(path.clone()));
        }
        if let Some(SceneError::Io { path, .. }) = cause.downcast_ref::<SceneError>() {
            return ("io", Some(path.clone()));
        }
        if let Some(TrajectoryError::Io { path, .. }) = cause.downcast_ref::<TrajectoryError>() {
            return ("io", Some(path.clone()));
        }
    }
    ("failed", None)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Scene(SceneCmd::Gen(a)) => commands::scene_gen(a, &settings),
        Command::Sample(a) => commands::sample(a, &settings),
        Command::Trajectory(a) => commands::trajectory(a, &settings),
        Command::Render(a) => commands::render(a, &settings),
        Command::Axis(AxisCmd::Gen(a)) => commands::axis_gen(a, &settings),
        Command::Eval(EvalCmd::Ap(a)) => evaluate::ap(a, &settings),
        Command::Eval(EvalCmd::Depth(a)) => evaluate::depth(a, &settings),
        Command::Eval(EvalCmd::Recon(a)) => evaluate::recon(a, &settings),
        Command::Eval(EvalCmd::AxisCurve(a)) => evaluate::axis_curve(a, &settings),
        Command::Demo(DemoCmd::Trends(a)) => demo::trends(a, &settings),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", json!({"error": "usage", "message": msg.trim()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, path) = classify(&e);
            let mut report = json!({"error": kind, "message": format!("{e:#}")});
            if let Some(p) = path {
                report["path"] = json!(p);
            }
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}
