//! `implosion`: command-line front end with reproducible run manifests.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Parser)]
#[command(name = "implosion", version, about = "Parabolic implosion and critical circle map experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Rotation p/q of the parabolic multiplier.
    #[arg(long, global = true, default_value = "1/2")]
    pub pq: String,
    /// Target rotation: `golden`, a decimal in (0, 1), or `cf:a1,a2,...`.
    #[arg(long, global = true, default_value = "golden")]
    pub omega: String,
    /// Phase `re,im`; overrides solving for σ.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub maxiter: Option<usize>,
    /// Number of Lavaurs map applications in rasters.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Viewport `x0,y0,x1,y1`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Classification raster as a PNG.
    Render,
    /// Cover and interior-proxy areas across resolutions.
    AreaScan {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        resolutions: Vec<usize>,
    },
    /// Abel and repelling functional-equation residuals.
    FatouCheck {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Phase σ realizing the target rotation at one end of the cylinder.
    SigmaSolve {
        #[arg(long, default_value = "upper")]
        end: String,
    },
    /// Fates of horn-map orbits on horizontal lines of the cylinder.
    HornProbe {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-20,-2,2,20")]
        heights: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 32)]
        budget: usize,
    },
    /// Tunes the critical circle map to the target rotation.
    CircleTune {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Real bounds of the dynamical partitions.
    PartitionReport {
        #[arg(long, default_value_t = 10)]
        levels: usize,
    },
    /// Matches random scales to partition intervals.
    ScaleMatch {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 16)]
        levels: usize,
    },
    /// Balls below partition intervals at levels 2 through `levels`.
    BallSweep {
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long, default_value_t = 0.2)]
        r0: f64,
    },
    /// Searches and validates cone-ball constants.
    ConeSearch {
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Re-runs the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("precision target missed: {0}")]
    Precision(String),
    #[error(transparent)]
    Core(#[from] implosion::Error),
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use implosion::Error as E;
        match self {
            CliError::Usage(_) => 64,
            CliError::Validation(_) | CliError::Json(_) => 2,
            CliError::Precision(_) => 3,
            CliError::Core(E::Domain(_) | E::Validation(_)) => 2,
            CliError::Core(E::Precision { .. } | E::NotCertified { .. } | E::Resource(_)) => 3,
            CliError::Core(E::Io(_)) | CliError::Io(_) => 1,
        }
    }
}

pub fn run(argv: Vec<String>) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.render().to_string()));
        }
    };
    if let Command::Replay { manifest } = &cli.command {
        let recorded = manifest::recorded_argv(manifest)?;
        let out = argv.iter().any(|a| a == "--out" || a.starts_with("--out=")).then(|| cli.common.out.clone());
        return run(manifest::replay_argv(recorded, out));
    }
    commands::execute(&cli, &argv)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
