//! `blowfish`: build Blowfish policies, induce their database adjacency
//! graphs, audit channels against the diameter bounds and reproduce the
//! tight construction.
//!
//! Exit codes: 0 success, 1 a check failed (its report is still written),
//! 2 bad input, 3 a resource cap was hit.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "blowfish",
    version,
    about = "Blowfish privacy policies and min-entropy leakage bounds"
)]
pub struct Cli {
    /// Largest number of databases to enumerate.
    #[arg(
        long,
        global = true,
        env = "BLOWFISH_MAX_DATABASES",
        default_value_t = 100_000
    )]
    pub max_databases: usize,

    /// Largest permutation group to enumerate.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub max_group: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Create or check policy files.
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Database adjacency graphs.
    #[command(subcommand)]
    Adjacency(AdjacencyCommand),
    /// Leakage and min-entropy bounds.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Inspect and generate channel matrices.
    #[command(subcommand)]
    Channel(ChannelCommand),
    /// Merge and group-average channels.
    #[command(subcommand)]
    Symmetrise(SymmetriseCommand),
    /// The family attaining the bound asymptotically.
    #[command(subcommand)]
    Tightness(TightnessCommand),
    /// Figure data as CSV.
    #[command(subcommand)]
    Figure(FigureCommand),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    DistanceThreshold,
    Cycle,
    Complete,
    Custom,
}

#[derive(Args, Debug)]
pub struct KindArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Numeric tuple values (distance-threshold, optional for custom).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
    /// Tuple labels (custom).
    #[arg(long, value_delimiter = ',')]
    pub tuples: Vec<String>,
    /// Secret pairs as `a:b` (custom).
    #[arg(long, value_delimiter = ',')]
    pub edges: Vec<String>,
    /// Tuple count (cycle, complete).
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum PolicyCommand {
    /// Write a policy file.
    Build {
        #[command(flatten)]
        kind: KindArgs,
        /// Distance threshold (distance-threshold).
        #[arg(long)]
        theta: Option<f64>,
        /// Records per database.
        #[arg(long)]
        n: usize,
        /// CSV of permissible databases, one per row as tuple labels.
        /// Every database is permissible when omitted.
        #[arg(long)]
        permissible: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a policy file and summarise it.
    Validate {
        policy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum AdjacencyCommand {
    /// Induce the adjacency graph of a policy.
    Induce {
        policy: PathBuf,
        /// Evaluate the definition exhaustively even when every database is
        /// permissible.
        #[arg(long)]
        brute_force: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum BoundCommand {
    /// Evaluate both bounds, and audit a channel when one is given.
    Compute {
        policy: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Channel CSV over the permissible databases in canonical order.
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct GraphSource {
    /// Policy whose adjacency graph to use.
    #[arg(long, conflicts_with = "graph")]
    pub policy: Option<PathBuf>,
    /// Graph or adjacency graph JSON.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mechanism {
    /// Distance-decaying randomized response.
    RandomizedResponse,
    /// Random weights and column splits, still private at the level.
    Random,
}

#[derive(Subcommand, Debug)]
pub enum ChannelCommand {
    /// Check that a CSV is a channel and measure its privacy level.
    Verify {
        channel: PathBuf,
        #[command(flatten)]
        source: GraphSource,
        /// Required privacy level.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Min-entropy leakage under the uniform or a given prior.
    Leakage {
        channel: PathBuf,
        /// Prior probabilities, comma or newline separated.
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a channel private at a given level.
    Generate {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Mechanism::RandomizedResponse)]
        mechanism: Mechanism,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Sum over the whole group.
    Full,
    /// Average over orbits of index pairs.
    PairOrbits,
    /// Run both and compare.
    Both,
}

#[derive(Subcommand, Debug)]
pub enum SymmetriseCommand {
    /// Merge columns onto diagonals, then average over graph symmetries.
    Run {
        channel: PathBuf,
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, value_enum, default_value_t = Strategy::Both)]
        strategy: Strategy,
        /// Output for the merged channel.
        #[arg(long)]
        merged: Option<PathBuf>,
        /// Output for the averaged channel.
        #[arg(long)]
        averaged: Option<PathBuf>,
        /// Output for the property report (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum TightnessCommand {
    /// One row per (n, δ).
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum FigureCommand {
    /// Bound against record count for several policies.
    BoundSweep {
        /// Tuple values for the distance-threshold policies.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1,2,3,4",
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        theta: Vec<f64>,
        /// Extra policy families, e.g. `cycle:6` or `complete:4`.
        #[arg(long, value_delimiter = ',')]
        family: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Measure randomized-response leakage when there are at most this
        /// many databases.
        #[arg(long, default_value_t = 256)]
        measure_up_to: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::CheckFailed(reason)) => {
            eprintln!("check failed: {reason}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
