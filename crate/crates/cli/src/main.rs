//! `flowml` command line: pcap/fixture flow extraction, dataset splitting,
//! the PCA variance sweep, with/without-PCA model comparison, feature
//! importance, PCA reports, synthetic data generation and the acceptance
//! suite. Exit codes: 0 success, 1 usage, 2 data error, 3 acceptance
//! failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    AcceptanceFailed,
}

#[derive(Parser)]
#[command(name = "flowml", version, about = "Flow feature extraction and PCA-filtered DoS classifiers")]
struct Cli {
    /// Flat key=value config file; FLOWML_* environment variables and
    /// command flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonIo {
    /// Directory the command writes its outputs (and resolved config) into.
    #[arg(long)]
    out_dir: PathBuf,
    /// Seed for every randomized step of this run.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a pcap or fixture capture into a flow feature CSV.
    Extract {
        #[command(flatten)]
        io: CommonIo,
        /// Capture file (.pcap or a text fixture).
        #[arg(long)]
        input: PathBuf,
        /// Input format; by default .pcap/.cap means pcap, anything else
        /// is read as a fixture.
        #[arg(long, value_parser = ["auto", "pcap", "fixture"], default_value = "auto")]
        format: String,
        /// Label written into every row.
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        udp_timeout_us: Option<i64>,
        #[arg(long)]
        tcp_timeout_us: Option<i64>,
        #[arg(long)]
        terminated_retention_us: Option<i64>,
        #[arg(long)]
        activity_threshold_us: Option<i64>,
        #[arg(long)]
        ooo_tolerance_us: Option<i64>,
    },
    /// Stratified train/validate/test split of a feature CSV.
    Split {
        #[command(flatten)]
        io: CommonIo,
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated train,validate,test fractions.
        #[arg(long)]
        fractions: Option<String>,
        #[arg(long, value_parser = ["flow", "generic"])]
        schema: Option<String>,
        /// key=value file renaming CSV columns onto the dictionary
        /// (map a column to `-` to drop it).
        #[arg(long)]
        columns_map: Option<PathBuf>,
    },
    /// PCA variance sweep under stratified cross-validation.
    Sweep {
        #[command(flatten)]
        io: CommonIo,
        #[arg(long)]
        train: PathBuf,
        /// Comma-separated variance targets.
        #[arg(long)]
        targets: Option<String>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, value_parser = ["flow", "generic"])]
        schema: Option<String>,
        #[arg(long)]
        columns_map: Option<PathBuf>,
    },
    /// Fit every configured family with and without PCA and tabulate.
    Compare {
        #[command(flatten)]
        io: CommonIo,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        variance_target: Option<f64>,
        /// Comma-separated families (DT,RF,k-NN,LDA,QDA,SVM).
        #[arg(long)]
        families: Option<String>,
        /// Family whose per-attack breakdown is written.
        #[arg(long)]
        breakdown: Option<String>,
        #[arg(long, value_parser = ["flow", "generic"])]
        schema: Option<String>,
        #[arg(long)]
        columns_map: Option<PathBuf>,
    },
    /// Decision-tree Gini feature importance plus a top-feature refit.
    Importance {
        #[command(flatten)]
        io: CommonIo,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// How many top features the refit keeps.
        #[arg(long)]
        n_top: Option<usize>,
        #[arg(long, value_parser = ["flow", "generic"])]
        schema: Option<String>,
        #[arg(long)]
        columns_map: Option<PathBuf>,
    },
    /// Scree, cumulative-variance and loadings reports of a PCA fit.
    PcaReport {
        #[command(flatten)]
        io: CommonIo,
        #[arg(long)]
        train: PathBuf,
        /// Components covered by the loadings report.
        #[arg(long)]
        top_m: Option<usize>,
        #[arg(long, value_parser = ["flow", "generic"])]
        schema: Option<String>,
        #[arg(long)]
        columns_map: Option<PathBuf>,
    },
    /// Generate a Gaussian-blob dataset CSV.
    SynthBlobs {
        #[command(flatten)]
        io: CommonIo,
        #[arg(long, default_value_t = 100)]
        n_per_class: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 10)]
        dims: usize,
        #[arg(long, default_value_t = 4)]
        informative: usize,
        #[arg(long, default_value_t = 8.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
    },
    /// Generate a packet fixture from the scenario catalog with its
    /// expected-flows manifest.
    SynthFlows {
        #[command(flatten)]
        io: CommonIo,
        /// Scenario name, or `all`.
        #[arg(long)]
        scenario: String,
    },
    /// Run the acceptance suite; exit code 3 on any failed criterion.
    Accept {
        #[command(flatten)]
        io: CommonIo,
        /// LYCOS-IDS2017 CSV directory for the dataset-dependent criterion
        /// (falls back to FLOWML_LYCOS_DIR; skipped when absent).
        #[arg(long)]
        lycos_dir: Option<PathBuf>,
        #[arg(long)]
        columns_map: Option<PathBuf>,
        /// Comma-separated criterion ids to run (default: all).
        #[arg(long)]
        only: Option<String>,
        /// Print every detail line, not just failures.
        #[arg(long)]
        verbose: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with success intent
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::AcceptanceFailed) => {
            eprintln!("acceptance suite failed");
            ExitCode::from(3)
        }
    }
}
