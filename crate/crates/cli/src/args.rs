use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "covertcap",
    version,
    about = "Covert capacity of non-coherent Rayleigh-fading channels"
)]
pub struct Cli {
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, env = "COVERTCAP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

/// Output flags shared by every command.
#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    /// Machine-readable CSV; a `<out>.manifest.json` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Two-column whitespace-separated data for gnuplot.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SearchArgs {
    /// Seed for the optimizer's random starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Largest atom location searched.
    #[arg(long, default_value_t = 5.0)]
    pub x_cap: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-atom lower bound and the closed upper bound.
    Bounds {
        #[arg(long)]
        theta: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bounds and best k-atom values over a geometric grid of gains.
    Curve {
        #[arg(long)]
        theta_min: f64,
        #[arg(long)]
        theta_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compares the best one-, two- and three-atom values.
    Conjecture {
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solves the divergence-constrained problem and prints its certificate.
    Kkt {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        theta: f64,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Convergence diagnostics of a vanishing-mixture sequence.
    Asymptotics {
        /// Inline JSON or `@path`.
        #[arg(long)]
        dist: String,
        #[arg(long)]
        delta: f64,
        /// Comma-separated blocklengths, e.g. `1e3,1e6`.
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Radiometer detection experiment on a sequence element.
    Simulate {
        /// Inline JSON or `@path`.
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}
