//! Command-line front end: every subcommand maps onto one library operation and
//! writes a versioned JSON record or a CSV table.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "colloid-expansion", version, about = "Cluster expansion tools for binary sphere mixtures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Flat key = value file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Monte Carlo samples.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Large-sphere radius.
    #[arg(long = "R")]
    pub big: Option<f64>,
    /// Small-sphere radius.
    #[arg(long = "r")]
    pub small: Option<f64>,
    /// Large-sphere activity.
    #[arg(long = "zR")]
    pub z_big: Option<f64>,
    /// Small-sphere activity.
    #[arg(long = "zr")]
    pub z_small: Option<f64>,
    /// Side of a periodic box (infinite volume when absent).
    #[arg(long = "L")]
    pub side: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Penetrable,
    Colloid,
}

impl std::str::FromStr for ModelArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <ModelArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Volumes of balls, lenses and intersections.
    #[command(subcommand)]
    Geometry(GeometryCmd),
    /// Graph enumeration and partition-scheme checks.
    #[command(subcommand)]
    Graphs(GraphsCmd),
    /// Effective activity and multi-body potentials.
    #[command(subcommand)]
    Effective(EffectiveCmd),
    /// Cluster coefficients.
    #[command(subcommand)]
    Coeff(CoeffCmd),
    /// Pressure series.
    Pressure(SeriesArgs),
    /// Density series.
    Density(DensityArgs),
    /// Convergence criteria.
    #[command(subcommand)]
    Convergence(ConvergenceCmd),
    /// Acceptance battery and oracle comparison.
    #[command(subcommand)]
    Validate(ValidateCmd),
}

#[derive(Subcommand, Debug)]
pub enum GeometryCmd {
    /// Intersection of two balls of equal radius.
    Lens {
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        dist: f64,
    },
    /// Exclusion, corona and overlap volumes for the model radii.
    Corona(ModelArgs),
    /// Common volume of balls given as `x,y,z,radius;...`.
    Intersection {
        #[arg(long)]
        balls: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum GraphsCmd {
    Count {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "connected")]
        class: GraphClass,
        /// Stars, for the star classes.
        #[arg(long)]
        m: Option<usize>,
        /// Clouds, for the star classes.
        #[arg(long)]
        r: Option<usize>,
    },
    PartitionCheck {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphClass {
    Connected,
    Trees,
    StarConnected,
    StarTrees,
}

#[derive(Subcommand, Debug)]
pub enum EffectiveCmd {
    Zhat {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Largest cloud size for the colloid series.
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// `W_k` for `k` centers at mutual distance `dist` (k ≤ 4).
    W {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        dist: f64,
        #[arg(long)]
        nmax: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PenetrableExact,
    ColloidSeries,
    FiniteVolumeRatio,
}

#[derive(Subcommand, Debug)]
pub enum CoeffCmd {
    Bm {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        m: usize,
        /// `db_m/dz_r` instead of `b_m` (penetrable).
        #[arg(long)]
        derivative: bool,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        rmax: Option<usize>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub order: Option<usize>,
    /// Fail instead of warning when the criterion does not hold.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub rmax: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct DensityArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, value_enum, default_value = "large")]
    pub species: SpeciesArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpeciesArg {
    Large,
    Small,
}

#[derive(Subcommand, Debug)]
pub enum ConvergenceCmd {
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        criterion: String,
        /// Effective activity; computed from the activities when absent.
        #[arg(long)]
        zhat: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long = "A")]
        big_a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Tabulates the penetrable bounds over `z_r`.
    Sweep {
        /// `start:stop:count`.
        #[arg(long = "zr", default_value = "0:0.2:41")]
        zr: String,
        /// Comma-separated large radii.
        #[arg(long = "R", default_value = "1")]
        big: String,
        /// Comma-separated small radii.
        #[arg(long = "r", default_value = "0.1")]
        small: String,
        /// Comma-separated subset of easy, kp, pair.
        #[arg(long, default_value = "easy,kp")]
        criteria: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum ValidateCmd {
    /// The twelve acceptance criteria.
    All {
        /// Reduced budgets.
        #[arg(long)]
        quick: bool,
        /// Run only these criteria (comma-separated numbers).
        #[arg(long)]
        only: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Series against the brute-force oracle (penetrable).
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n1max: Option<usize>,
        #[arg(long)]
        n2max: Option<usize>,
        #[arg(long)]
        streams: Option<usize>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        density_order: Option<usize>,
        /// Samples per cluster coefficient.
        #[arg(long)]
        coeff_samples: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(violated) => ExitCode::from(if violated { 2 } else { 0 }),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
