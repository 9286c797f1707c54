//! `eigenoptions` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification failure,
//! 3 numerical failure.

mod commands;
mod manifest;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eigenoptions::LaplacianKind;

use crate::spec::{Cell, OptionSpec, Task};

#[derive(Debug, Parser)]
#[command(name = "eigenoptions", version, about = "Discover eigenoptions on gridworlds and measure what they buy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct MapArg {
    /// Shipped map (open_grid, imaze, four_room) or a map file path
    #[arg(long, default_value = "four_room")]
    pub map: String,
}

#[derive(Debug, Clone, Args)]
pub struct SpectralArgs {
    /// Laplacian used for the PVFs
    #[arg(long, default_value = "normalized", value_parser = parse_kind)]
    pub laplacian: LaplacianKind,
    /// Discount of the eigenpurpose MDPs (and of the Q-learner where one runs)
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutArg {
    /// Directory for CSV/JSON outputs and the manifest
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct LearnArgs {
    /// Episodes per trial [default: 500 for learn, 250 for multitask]
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Primitive steps per episode
    #[arg(long, default_value_t = 100)]
    pub episode_len: usize,
    /// Independent trials, paired across agents by seed
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Q-learning step size
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArrivalArg {
    /// The first visit to the goal counts, also mid-option
    FirstVisit,
    /// Only the end of a primitive or option counts
    DecisionPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeaturesArg {
    Tabular,
    Coordinates,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the first k eigenpurposes (both signs) and write options, renderings and a summary
    Discover {
        #[command(flatten)]
        map: MapArg,
        #[command(flatten)]
        spectral: SpectralArgs,
        /// Number of eigenvectors; yields 2k options
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Diffusion time as option sign pairs are added
    Diffusion {
        #[command(flatten)]
        map: MapArg,
        #[command(flatten)]
        spectral: SpectralArgs,
        /// Option set swept: eigen:N or random:N (pairs are added in order)
        #[arg(long, default_value = "eigen:64")]
        options: OptionSpec,
        /// Monte Carlo walks per row; 0 skips the estimate
        #[arg(long, default_value_t = 0)]
        mc_walks: usize,
        /// Step cap per Monte Carlo walk
        #[arg(long, default_value_t = 100_000_000)]
        mc_cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "first-visit")]
        arrival: ArrivalArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Q-learning curves for one task and several option sets
    Learn {
        #[command(flatten)]
        map: MapArg,
        #[command(flatten)]
        spectral: SpectralArgs,
        /// Option set, repeatable: none, eigen:N, random:N, bottleneck
        #[arg(long, default_values = ["none", "eigen:64"])]
        options: Vec<OptionSpec>,
        /// Start cell as row,col [default: the map's S]
        #[arg(long)]
        start: Option<Cell>,
        /// Goal cell as row,col [default: the map's G]
        #[arg(long)]
        goal: Option<Cell>,
        #[command(flatten)]
        learn: LearnArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// One option set on several tasks and their swaps, against primitive and bottleneck agents
    Multitask {
        #[command(flatten)]
        map: MapArg,
        #[command(flatten)]
        spectral: SpectralArgs,
        #[arg(long, default_value = "eigen:64")]
        options: OptionSpec,
        /// Task as r,c:r,c (start:goal), repeatable
        #[arg(long = "task", default_values = ["11,1:1,11", "1,1:11,11", "3,3:9,9"])]
        tasks: Vec<Task>,
        #[command(flatten)]
        learn: LearnArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Eigenpurposes from sampled transitions via the incidence matrix
    Sampled {
        #[command(flatten)]
        map: MapArg,
        #[arg(long, value_enum, default_value = "tabular")]
        features: FeaturesArg,
        /// Random-walk transitions to sample; 0 enumerates every transition
        #[arg(long, default_value_t = 0)]
        budget: usize,
        /// Read the incidence matrix from this CSV instead of sampling
        #[arg(long)]
        incidence: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check termination, the incidence identity and SVD/Laplacian agreement
    Verify {
        /// Maps to check, repeatable [default: all shipped maps]
        #[arg(long)]
        map: Vec<String>,
        #[arg(long, default_value = "normalized", value_parser = parse_kind)]
        laplacian: LaplacianKind,
        /// Discounts checked, repeatable
        #[arg(long, default_values_t = [0.1, 0.5, 0.9, 0.99])]
        gamma: Vec<f64>,
        /// Also check this incidence CSV against the (single) map
        #[arg(long)]
        incidence: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

fn parse_kind(s: &str) -> Result<LaplacianKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Discover { map, spectral, k, out } => commands::discover(&map, &spectral, k, &out),
        Command::Diffusion {
            map,
            spectral,
            options,
            mc_walks,
            mc_cap,
            seed,
            arrival,
            out,
        } => commands::diffusion(&map, &spectral, &options, mc_walks, mc_cap, seed, arrival, &out),
        Command::Learn {
            map,
            spectral,
            options,
            start,
            goal,
            learn,
            out,
        } => commands::learn(&map, &spectral, &options, start, goal, &learn, &out),
        Command::Multitask {
            map,
            spectral,
            options,
            tasks,
            learn,
            out,
        } => commands::multitask(&map, &spectral, &options, &tasks, &learn, &out),
        Command::Sampled {
            map,
            features,
            budget,
            incidence,
            k,
            seed,
            out,
        } => commands::sampled(&map, features, budget, incidence.as_deref(), k, seed, &out),
        Command::Verify {
            map,
            laplacian,
            gamma,
            incidence,
            out,
        } => commands::verify(&map, laplacian, &gamma, incidence.as_deref(), &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
