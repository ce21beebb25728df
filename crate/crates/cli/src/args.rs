use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Learn empathic networks from expert judgments and statements.
#[derive(Debug, Parser)]
#[command(name = "empnet", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Session directory.
    #[arg(long, global = true, env = "EMPNET_SESSION", default_value = ".")]
    pub session: PathBuf,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for multistart searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub eps_prime: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub rho0: Option<f64>,
    #[arg(long, global = true)]
    pub big_m: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a session from a problem file.
    Init {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Show the session phase and sizes.
    Status,
    /// Complete every expert's judgment matrix and derive intrinsic utilities.
    CompleteJudgments,
    /// Print intrinsic utilities, or load them from a file.
    Intrinsic {
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Add intrinsic statements from a JSON array, or drop them by 1-based position.
    IntrinsicStatements {
        #[arg(long, conflicts_with = "drop", required_unless_present = "drop")]
        file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        drop: Vec<usize>,
    },
    /// Add empathic and node statements from a JSON array.
    Statements {
        #[arg(long)]
        file: PathBuf,
    },
    /// Feasibility of the statement system, with repair sets if inconsistent.
    Check {
        #[arg(long, default_value_t = 16)]
        limit: usize,
    },
    /// Drop one repair set (1-based) or named statements.
    Resolve {
        #[arg(long, conflicts_with = "drop", required_unless_present = "drop")]
        set: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        drop: Vec<String>,
        #[arg(long, default_value_t = 16)]
        limit: usize,
    },
    /// Necessary and possible arcs for every ordered pair.
    Relations,
    /// Choose a representative network.
    Select {
        #[arg(long, value_enum)]
        target: TargetArg,
        /// Star center, 1-based.
        #[arg(long)]
        center: Option<usize>,
        #[arg(long, value_enum, default_value_t = DirectionArg::Fwd)]
        direction: DirectionArg,
        /// Tree edges as JSON `{"edges":[{"parent":..,"child":..}]}`.
        #[arg(long)]
        tree: Option<PathBuf>,
        /// Multistart count for the central target.
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Social welfare per network, baseline first.
    Welfare {
        /// JSON array of labelled networks; defaults to the selected ones.
        #[arg(long)]
        networks: Option<PathBuf>,
    },
    /// Write a stored result in the requested format.
    Export {
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long, value_enum)]
        what: Option<WhatArg>,
        /// Selected network by target name.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Discriminating,
    Sparse,
    Central,
    Distributed,
    ResilientLocal,
    ResilientGlobal,
    Star,
    Bus,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Fwd,
    Rev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Dot,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WhatArg {
    Session,
    Network,
    Relations,
    Welfare,
    Intrinsic,
}
