//! `hfsync` command-line interface.
//!
//! Exit codes: 0 on success, 1 on a runtime failure (or a failed selftest),
//! 2 on a configuration or usage error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hfsync::montecarlo::EstimatorKind;
use hfsync::sync::Scheme;
use hfsync::SystemConfig;

#[derive(Debug, Parser)]
#[command(name = "hfsync", version, about = "Hierarchical CFO synchronization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-trial MSE CDFs of the synchronization schemes
    Mse(MseArgs),
    /// HFS MSE under UE mobility, with the theory-vs-simulation table
    Speed(SpeedArgs),
    /// Operation counts of HFS, the MUSIC-like baseline and PBEE
    Complexity(ComplexityArgs),
    /// Fast invariant checks
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; missing keys take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long, env = "HFSYNC_OUT_DIR", default_value = "hfsync-out")]
    out: PathBuf,
    /// Per-link estimator; `oracle` returns the exact CFO
    #[arg(long, value_enum, default_value = "music")]
    estimator: EstimatorArg,
    /// Config overrides as key=value, applied after the config file
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum EstimatorArg {
    Music,
    Oracle,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Music => EstimatorKind::Music,
            EstimatorArg::Oracle => EstimatorKind::Oracle,
        }
    }
}

#[derive(Debug, Args)]
struct MseArgs {
    #[command(flatten)]
    common: Common,
    /// Schemes to run
    #[arg(long, value_delimiter = ',', default_value = "hfs,baseline")]
    scheme: Vec<Scheme>,
    /// AAU counts to sweep
    #[arg(long, value_delimiter = ',', default_value = "16,64")]
    aaus: Vec<usize>,
    /// Also write the first trial's UE-to-secondary received burst to burst.csv
    #[arg(long)]
    dump_burst: bool,
}

#[derive(Debug, Args)]
struct SpeedArgs {
    #[command(flatten)]
    common: Common,
    /// UE speeds in m/s
    #[arg(long, value_delimiter = ',', default_value = "0,10,50,100")]
    speeds: Vec<f64>,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    /// TOML config file supplying N, data carriers, symbols and grid size
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = "HFSYNC_OUT_DIR", default_value = "hfsync-out")]
    out: PathBuf,
    /// AAU counts
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    aaus: Vec<usize>,
    /// UE counts
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    ues: Vec<usize>,
    /// Search points of the pairing-based estimator
    #[arg(long, default_value_t = 50)]
    epsilon: usize,
    /// Config overrides as key=value
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Run only checks whose name contains this string
    #[arg(long)]
    filter: Option<String>,
    /// Negate the stage-1 term in HFS reconstruction (fault injection)
    #[arg(long, hide = true)]
    inject_sign_flip: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hfsync::Error),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_config() => 2,
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl Common {
    fn load(&self) -> Result<SystemConfig, CliError> {
        let mut cfg = SystemConfig::load(self.config.as_deref(), &self.overrides)?;
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.validate()?;
        if self.jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mse(a) => commands::mse(a),
        Command::Speed(a) => commands::speed(a),
        Command::Complexity(a) => commands::complexity(a),
        Command::Selftest(a) => commands::selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
