//! Command-line driver: experiment configs in, CSV and JSON out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use lhdeform::verify::superposition::BranchChoice;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "lhdeform",
    version,
    about = "Deformed Lie-Hamilton systems: integration, constants, superposition and verification"
)]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Superposition branch.
    #[arg(long, global = true, value_enum, default_value_t = BranchArg::Auto)]
    pub branch: BranchArg,
    /// Overrides the deformation parameter of the config.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z: Option<f64>,
    /// Check selector for `verify`: comma-separated globs or `all`.
    #[arg(long, global = true)]
    pub suite: Option<String>,
    /// Suite seed; defaults to the config seed, then the built-in seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Plus,
    Minus,
    Auto,
}

impl From<BranchArg> for BranchChoice {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Plus => BranchChoice::Plus,
            BranchArg::Minus => BranchChoice::Minus,
            BranchArg::Auto => BranchChoice::Auto,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrates the configured flow and writes trajectory.csv.
    Integrate,
    /// Evaluates every applicable constant of motion and its drift.
    Constants {
        /// Inline three-copy state `x1,y1,x2,y2,x3,y3`; repeatable.
        #[arg(long = "points", allow_hyphen_values = true)]
        points: Vec<String>,
        /// Trajectory CSV to read states from.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Rebuilds the first copy from the other two along the flow.
    Superpose {
        /// `k1,k` to use instead of the values at the initial state.
        #[arg(long, allow_hyphen_values = true)]
        constants: Option<String>,
    },
    /// Runs verification checks and writes report.json.
    Verify {
        /// Same as --suite.
        selector: Option<String>,
    },
    /// Distance of each deformed object to its undeformed limit over a z grid.
    LimitScan {
        /// Family name glob.
        #[arg(long, default_value = "*")]
        family: String,
        #[arg(long, default_value = "1e-2,1e-3,1e-4")]
        z_grid: String,
        /// Sample points per family.
        #[arg(long)]
        points: Option<usize>,
    },
}

pub fn run(cli: &Cli) -> CliResult<u8> {
    let g = commands::Globals {
        config: cli.config.clone(),
        out: cli.out.clone(),
        branch: cli.branch.into(),
        z: cli.z,
        suite: cli.suite.clone(),
        seed: cli.seed,
    };
    if let Some(z) = g.z {
        if !z.is_finite() {
            return Err(CliError::usage("--z must be finite"));
        }
    }
    match &cli.command {
        Command::Integrate => commands::integrate(&g),
        Command::Constants { points, trajectory } => {
            commands::constants(&g, points, trajectory.as_deref())
        }
        Command::Superpose { constants } => commands::superpose(&g, constants.as_deref()),
        Command::Verify { selector } => commands::verify(&g, selector.as_deref()),
        Command::LimitScan {
            family,
            z_grid,
            points,
        } => commands::limit_scan(&g, family, z_grid, *points),
    }
}
