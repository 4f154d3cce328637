use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

/// Compress long frame-embedding sequences and measure what survives.
#[derive(Debug, Parser)]
#[command(name = "speechfuse", version, about)]
pub struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// Print a JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// JSON or TOML config; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More logging (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic dataset.
    Gen(GenArgs),
    /// Train the CTC decoder head on a manifest.
    TrainCtc(TrainArgs),
    /// Per-frame content density from a trained decoder.
    Density(DensityArgs),
    /// Compress sequences to a target length.
    Compress(CompressArgs),
    /// Greedy-decode sequences.
    Decode(DecodeArgs),
    /// Run the fuser x target-length benchmark grid.
    Bench(BenchArgs),
    /// Check the optimized routines against brute-force references.
    Oracle(OracleArgs),
    /// Write a target-length plan for dynamic-compression training.
    Plan(PlanArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub vocab: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: Option<u64>,
    /// Number of sequences.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub silence_prob: Option<f64>,
    #[arg(long)]
    pub tokens_min: Option<usize>,
    #[arg(long)]
    pub tokens_max: Option<usize>,
    #[arg(long)]
    pub allow_repeats: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial blank logit.
    #[arg(long, allow_hyphen_values = true)]
    pub blank_bias: Option<f64>,
    #[arg(short, long)]
    pub out: PathBuf,
}

/// Sequences given either as `FSQ1` files or through a manifest.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long)]
    pub decoder: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FuserArg {
    Density,
    SingleShot,
    Mostsim,
    Avgpool,
    Random,
}

impl FuserArg {
    pub fn fuser(self) -> speechfuse::Fuser {
        use speechfuse::Fuser;
        match self {
            FuserArg::Density => Fuser::Density,
            FuserArg::SingleShot => Fuser::SingleShot,
            FuserArg::Mostsim => Fuser::MostSim,
            FuserArg::Avgpool => Fuser::AvgPool,
            FuserArg::Random => Fuser::Random,
        }
    }

    pub fn needs_density(self) -> bool {
        matches!(self, FuserArg::Density | FuserArg::SingleShot)
    }
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, value_enum, default_value = "density")]
    pub fuser: FuserArg,
    /// Target length in frames.
    #[arg(long = "L", value_parser = clap::value_parser!(u64).range(1..))]
    pub target: u64,
    /// Decoder checkpoint; required by the density and single-shot fusers.
    #[arg(long, required_if_eq_any = [("fuser", "density"), ("fuser", "single-shot")])]
    pub decoder: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long)]
    pub decoder: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridPreset {
    /// The synthetic trend experiment over T, T/2, T/4, T/8.
    Default,
    /// Longer sequences at absolute targets 400..12.
    Absolute,
    /// A quick small run.
    Smoke,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "default")]
    pub grid: GridPreset,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Benchmark an existing dataset instead of generating one.
    #[arg(long, requires = "decoder")]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    pub decoder: Option<PathBuf>,
    /// Fusers for a manifest run, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub fusers: Vec<String>,
    /// Targets for a manifest run: N, T or T/k, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    /// Also write per-cell wall-clock timings (not reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Exit with status 4 when a trend gate fails.
    #[arg(long)]
    pub strict: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Ctc,
    Grad,
    Select,
    All,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Longest sequence in the CTC enumeration suite.
    #[arg(long = "max-T", default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=10))]
    pub max_t: u64,
    /// Instances per suite (default 1000, 100 for grad).
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allowed target lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<usize>,
    #[arg(short, long)]
    pub out: PathBuf,
}

/// Exit statuses beyond clap's usage error (2).
pub mod exit {
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const NUMERICAL: u8 = 4;
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::USAGE);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Library errors already quote their source, so skip repeats.
            let mut msg = err.to_string();
            for cause in err.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
