use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use self_indicator::indicator::{CombineMode, ScoreConfig, DEFAULT_DELTA};
use self_indicator::linalg::NormalizationMode;
use self_indicator::oracle::OracleConfig;
use self_indicator::voting::Weighting;

mod commands;
mod render;

#[derive(Debug, Parser)]
#[command(name = "sind", version, about = "Score, vote and evaluate sampled solutions by correlation-matrix rank")]
struct Cli {
    /// Directory for outputs written without an explicit `--out`.
    #[arg(long, global = true, env = "SIND_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct ScoreArgs {
    /// Rank threshold δ shared by the QA and AQ views.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value = "add")]
    combine: CombineMode,
    /// raw, unit-rows or spectral.
    #[arg(long, default_value = "raw")]
    mode: NormalizationMode,
    /// Use only the first K candidates of the manifest.
    #[arg(long)]
    k: Option<usize>,
}

impl ScoreArgs {
    fn config(&self) -> ScoreConfig {
        ScoreConfig { delta: self.delta, combine: self.combine, normalization: self.mode }
    }
}

#[derive(Debug, Args, Clone)]
struct OracleArgs {
    #[arg(long, default_value_t = OracleConfig::default().n)]
    n: usize,
    #[arg(long, default_value_t = OracleConfig::default().d)]
    d: usize,
    /// Rank of W.
    #[arg(long, default_value_t = OracleConfig::default().r)]
    r: usize,
    /// Correct solution length.
    #[arg(long, default_value_t = OracleConfig::default().m)]
    m: usize,
    /// Correct prefix kept by the incorrect solution.
    #[arg(long, default_value_t = OracleConfig::default().eta)]
    eta: usize,
    #[arg(long, default_value_t = OracleConfig::default().noise_len)]
    noise_len: usize,
    #[arg(long, default_value_t = OracleConfig::default().scalar_range.0)]
    scalar_lo: f64,
    #[arg(long, default_value_t = OracleConfig::default().scalar_range.1)]
    scalar_hi: f64,
    #[arg(long, default_value_t = OracleConfig::default().trials)]
    trials: usize,
    #[arg(long, default_value_t = OracleConfig::default().seed)]
    seed: u64,
}

impl OracleArgs {
    fn config(&self) -> OracleConfig {
        OracleConfig {
            n: self.n,
            d: self.d,
            r: self.r,
            m: self.m,
            eta: self.eta,
            noise_len: self.noise_len,
            scalar_range: (self.scalar_lo, self.scalar_hi),
            trials: self.trials,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every candidate of a manifest and write a score report.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
        /// Record wall-clock time in the report (breaks byte-for-byte reproducibility).
        #[arg(long)]
        timing: bool,
    },
    /// Vote over a manifest's candidates and print the winning answer.
    Vote {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
        /// `self-consistency` switches to uniform weights.
        #[arg(long, default_value = "indicator", value_parser = parse_weighting)]
        baseline: Weighting,
    },
    /// Decision accuracy of correct/incorrect pairs over a δ grid.
    EvalPairs {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.75,1.0,1.25,1.5,1.75,2.0")]
        delta_grid: Vec<f64>,
        /// Keep only pairs whose lengths differ by less than this; repeatable.
        #[arg(long)]
        max_len_diff: Vec<usize>,
        #[arg(long, default_value = "add")]
        combine: CombineMode,
        #[arg(long, default_value = "raw")]
        mode: NormalizationMode,
    },
    /// Run seeded synthetic linear-attention trials and report rank statistics.
    Oracle {
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy of both voting methods over a δ grid or a K grid.
    Sweep {
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', conflicts_with = "k_grid", required_unless_present = "k_grid")]
        delta_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Write a synthetic pair manifest with oracle-generated bundles.
    SynthPairs {
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Write a synthetic candidate manifest; answers equal to the truth get correct-solution bundles.
    SynthCandidates {
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        problem_id: String,
        #[arg(long = "answer", required = true)]
        answers: Vec<String>,
        #[arg(long)]
        ground_truth: String,
        /// Oracle instance used for the first candidate.
        #[arg(long, default_value_t = 0)]
        first_index: usize,
    },
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    match s {
        "indicator" => Ok(Weighting::Indicator),
        "self-consistency" => Ok(Weighting::SelfConsistency),
        other => Err(format!("unknown baseline `{other}` (expected indicator or self-consistency)")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
