//! `fundlemma` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 insufficient excitation,
//! 3 insufficient data or rank, 4 certification failure, 5 order undetermined.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fundlemma::Error;

#[derive(Parser, Debug)]
#[command(name = "fundlemma", version, about = "Data-driven analysis of linear systems from multiple trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Tolerances {
    /// Relative singular-value threshold for rank decisions.
    #[arg(long = "tol-rank", default_value_t = fundlemma::linalg::DEFAULT_RANK_TOL)]
    rank: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a system under seeded uniform [0, 1) inputs and write trajectory CSV.
    Generate {
        /// System JSON file, or one of the built-ins `batch-reactor`, `example`.
        #[arg(long)]
        system: String,
        /// Number of input samples per experiment.
        #[arg(long)]
        len: usize,
        /// Number of experiments; with more than one, files are `<stem>-<i>.<ext>`.
        #[arg(long, default_value_t = 1)]
        experiments: usize,
        /// Redraw inputs until they are collectively persistently exciting of this order.
        #[arg(long)]
        order: Option<usize>,
        /// Time steps whose input and output are blanked, comma separated.
        #[arg(long, value_delimiter = ',')]
        knockout: Vec<i64>,
        /// Include state columns (needed by `lqr` and `export-sdp`).
        #[arg(long)]
        states: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-segment and collective persistency of excitation of the inputs.
    PeCheck {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        order: usize,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Continue a trajectory from data only.
    DdSimulate {
        /// Data trajectories (input/output CSV; missing rows split segments).
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Depth of the data dictionary; the past window is `depth - 1` samples.
        #[arg(long)]
        depth: usize,
        /// Past input/output samples (CSV with the same columns as the data).
        #[arg(long)]
        past: PathBuf,
        /// Future inputs (CSV with input columns only).
        #[arg(long)]
        future: PathBuf,
        /// Largest accepted relative residual of the past fit.
        #[arg(long = "tol-past", default_value_t = fundlemma::willems::DEFAULT_PAST_TOL)]
        tol_past: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identify a state-space model from a record with missing samples.
    Identify {
        file: PathBuf,
        #[arg(long = "max-order")]
        max_order: Option<usize>,
        /// Largest Hankel depth used for order estimation (default: longest run).
        #[arg(long)]
        depth: Option<usize>,
        /// Complete runs shorter than this are discarded.
        #[arg(long = "min-segment", default_value_t = 2)]
        min_segment: usize,
        #[command(flatten)]
        tol: Tolerances,
        /// Output system JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Infinite-horizon LQR gain from input/state experiments.
    Lqr {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Weights JSON `{"Q": [[..]], "R": [[..]]}`; identity weights if omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        tol: Tolerances,
        /// Relative tolerance for the data-side certificate.
        #[arg(long = "tol-cert", default_value_t = fundlemma::lqr::DEFAULT_CERT_TOL)]
        tol_cert: f64,
        /// Output gain JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the data-driven LQR semidefinite program in SDPA sparse format.
    ExportSdp {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// State norm growth of one long open-loop experiment.
    DemoInstability {
        #[arg(long, default_value = "batch-reactor")]
        system: String,
        #[arg(long, default_value_t = 20)]
        len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional CSV of the experiment, with states.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Io(_) | Error::Json(_) | Error::Parse { .. } | Error::Dimension(_) | Error::InvalidInput(_) => 1,
        Error::InsufficientExcitation { .. } => 2,
        Error::InsufficientData { .. }
        | Error::NoUsableData(_)
        | Error::DepthExceedsLength { .. }
        | Error::OrderInfeasible { .. }
        | Error::InconsistentPast { .. } => 3,
        Error::CertificationFailed { .. } | Error::RiccatiDivergence { .. } | Error::NotStabilizing { .. } => 4,
        Error::OrderUndetermined(_) => 5,
        Error::Stage { .. } => unreachable!("root() strips stages"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
