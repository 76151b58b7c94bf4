//! `snbi`: run the notification server, generate and evaluate reaction
//! datasets, train the serving model and replay walking routes.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use snbi_core::sim::DEFAULT_SHARPNESS;

use config::GlobalArgs;

#[derive(Debug, Parser)]
#[command(name = "snbi", version, about = "Context-based barrier notification server and tools")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP service until interrupted
    Serve {
        /// Port to listen on; 0 picks a free one [default: 8080]
        #[arg(long, env = "SNBI_PORT")]
        port: Option<u16>,
        /// Address to bind [default: 127.0.0.1]
        #[arg(long, env = "SNBI_HOST")]
        host: Option<String>,
    },
    /// Write a synthetic reaction dataset as CSV
    GenDataset {
        /// Number of records
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Label-noise rate in [0, 0.5] [default: 0]
        #[arg(long, conflicts_with = "target_accuracy")]
        noise: Option<f64>,
        /// Pick the noise rate that gives this Bayes-optimal accuracy
        #[arg(long)]
        target_accuracy: Option<f64>,
        /// Mass on the example reaction of each feature table
        #[arg(long, default_value_t = DEFAULT_SHARPNESS)]
        sharpness: f64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn the reaction model from a dataset
    Train {
        /// CSV dataset; with --server-url the path is read by the server
        #[arg(long)]
        dataset: PathBuf,
        /// Train a running server instead of writing <data-dir>/model.json
        #[arg(long)]
        server_url: Option<String>,
    },
    /// Cross-validate the reaction model on a dataset
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Number of folds, at least 2
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Shuffle seed for the fold split
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the report as JSON instead of a table
        #[arg(long)]
        json: bool,
        /// Noise rate the dataset was generated with; adds the Bayes-optimal accuracy to the header
        #[arg(long)]
        truth_noise: Option<f64>,
        /// Sharpness the dataset was generated with, used with --truth-noise
        #[arg(long, default_value_t = DEFAULT_SHARPNESS)]
        sharpness: f64,
    },
    /// Walk a route against the selector and log every poll
    Simulate {
        /// Route JSON: waypoints, speed, poll_interval
        #[arg(long)]
        route: PathBuf,
        /// User context JSON
        #[arg(long)]
        context: PathBuf,
        /// Contents to submit first, one JSON submission per line
        #[arg(long)]
        contents: Option<PathBuf>,
        /// Replay against a running server
        #[arg(long, required_unless_present = "in_process", conflicts_with = "in_process")]
        server_url: Option<String>,
        /// Replay against an in-memory engine
        #[arg(long)]
        in_process: bool,
        /// Model for --in-process [default: <data-dir>/model.json]
        #[arg(long)]
        model: Option<PathBuf>,
        /// Event log output (JSON lines)
        #[arg(long)]
        out: Option<PathBuf>,
        /// UTC seconds of the first poll
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        start_at: i64,
        /// Print the summary as JSON
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime { code: String, message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn runtime(code: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Runtime {
            code: code.into(),
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime { .. } => 1,
        }
    }

    fn to_json(&self) -> String {
        let (code, message) = match self {
            CliError::Usage(m) => ("usage", m.as_str()),
            CliError::Runtime { code, message } => (code.as_str(), message.as_str()),
        };
        serde_json::json!({ "error": code, "message": message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime { message, .. } => f.write_str(message),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::usage(e.kind().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
