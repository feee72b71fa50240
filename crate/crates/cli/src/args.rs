use crate::output::Format;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ops::RangeInclusive;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "bykov", version, about = "Return-map model of a Bykov heteroclinic network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Contracting rate at sigma_1.
    #[arg(long = "C1")]
    pub c1: f64,
    /// Expanding rate at sigma_1.
    #[arg(long = "E1")]
    pub e1: f64,
    /// Contracting rate at sigma_2.
    #[arg(long = "C2")]
    pub c2: f64,
    /// Expanding rate at sigma_2.
    #[arg(long = "E2")]
    pub e2: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct Lambda {
    /// Perturbation parameter, in [0, 1).
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Principal,
    Conjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedArg {
    /// Cells meeting y = lambda sin x.
    Unstable,
    /// Cells meeting y = 0.
    Stable,
}

/// `a` or `a..b` (inclusive).
pub fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad index {t:?}: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if a == 0 || a > b {
        return Err(format!("range {s:?} must satisfy 1 <= start <= end"));
    }
    Ok(a..=b)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed points p_l of winding index l.
    FixedPoints {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        #[arg(long, value_parser = parse_range)]
        ell: RangeInclusive<u32>,
    },
    /// Thresholds a < b < c < d of the fixed-point family.
    Thresholds {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_range)]
        ell: RangeInclusive<u32>,
        #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
        precision: PrecisionArg,
    },
    /// Eigenvalues, eigenvectors and exponents of the principal fixed points.
    EigenScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        #[arg(long, value_parser = parse_range)]
        ell: RangeInclusive<u32>,
    },
    /// Lyapunov exponents at a fixed point (with --ell) or along the orbit of (--x, --y).
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        #[arg(long, conflicts_with_all = ["x", "y"])]
        ell: Option<u32>,
        #[arg(long, value_enum, default_value_t = BranchArg::Principal)]
        branch: BranchArg,
        #[arg(long, requires = "y")]
        x: Option<f64>,
        #[arg(long, requires = "x")]
        y: Option<f64>,
        /// Returns along the orbit, or cycle periods at a fixed point.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        transient: usize,
        #[arg(long, default_value_t = 1)]
        renorm_period: usize,
    },
    /// Forward orbit of the return map.
    Orbit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// One return of the suspended linear flow in local coordinates.
    Flow {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Horizontal strips H_n and their crossing reports.
    Strips {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        /// Half-width of the rectangle.
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
        #[arg(long, default_value_t = 0.0)]
        center_x: f64,
        #[arg(long, value_parser = parse_range, default_value = "1..8")]
        n: RangeInclusive<u32>,
    },
    /// n-pulse roots on the unstable curve.
    Pulses {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 0.0)]
        x_lo: f64,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        x_hi: f64,
        #[arg(long, default_value_t = 4096)]
        initial_points: usize,
        #[arg(long, default_value_t = 3)]
        refinement_levels: u32,
    },
    /// Parameters at which two n-pulse roots coalesce.
    Tangencies {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long)]
        lambda_lo: f64,
        #[arg(long)]
        lambda_hi: f64,
        #[arg(long, default_value_t = 2048)]
        grid_points: usize,
    },
    /// Chain-accessible region on a cell grid.
    Chain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lambda: Lambda,
        #[arg(long, default_value_t = 512)]
        nx: usize,
        #[arg(long, default_value_t = 512)]
        ny: usize,
        #[arg(long, default_value_t = 0.5)]
        y_max: f64,
        /// Defaults to four diagonals of the largest cell.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        tau: f64,
        #[arg(long, default_value_t = 3)]
        max_iterates: usize,
        #[arg(long, value_enum, default_value_t = SeedArg::Unstable)]
        seed: SeedArg,
        /// Also run the invariance, closedness and stability checks.
        #[arg(long)]
        verify: bool,
    },
    /// Principal fixed points over a lambda grid for each winding index.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_range)]
        ell: RangeInclusive<u32>,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long, default_value_t = 16)]
        lambda_steps: usize,
        /// Geometric spacing.
        #[arg(long)]
        log: bool,
        /// Grid values are multiples of a_l rather than absolute.
        #[arg(long)]
        relative: bool,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::FixedPoints { common, .. }
            | Command::Thresholds { common, .. }
            | Command::EigenScan { common, .. }
            | Command::Lyapunov { common, .. }
            | Command::Orbit { common, .. }
            | Command::Flow { common, .. }
            | Command::Strips { common, .. }
            | Command::Pulses { common, .. }
            | Command::Tangencies { common, .. }
            | Command::Chain { common, .. }
            | Command::Scan { common, .. } => common,
        }
    }
}
