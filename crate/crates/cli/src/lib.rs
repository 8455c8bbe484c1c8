//! Command-line front end for `lovelock-mass`: `mass`, `verify`, `penrose`
//! and `flux`.

pub mod commands;
pub mod config;
pub mod suites;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

pub use commands::run;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] lovelock_mass::Error),
    #[error("{0}")]
    Io(String),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const FIT_WARNING: i32 = 2;
    pub const BOUND_VIOLATION: i32 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "lovelock-mass", version, about = "Gauss-Bonnet-Chern and Lovelock masses of asymptotically flat metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extrapolate a mass from flux integrals over large spheres.
    Mass(Common),
    /// Run a randomized identity suite.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Penrose chain for a graph with a horizon.
    Penrose {
        /// JSON file describing the horizon.
        #[arg(long)]
        horizon: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Flux versus radius as CSV.
    Flux(Common),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// euclidean, schwarzschild, egb, schwarzschild-graph, egb-graph, random-graph
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// rho or conformal (Schwarzschild family).
    #[arg(long)]
    pub chart: Option<String>,
    /// Integrand: gbc, adm, mk or egb.
    #[arg(long = "as")]
    pub as_: Option<String>,
    /// Comma-separated radii.
    #[arg(long, conflicts_with_all = ["r0", "ratio", "count"])]
    pub radii: Option<String>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub quad_level: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
