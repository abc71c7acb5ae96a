use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;
use self_indicator::indicator::{CombineMode, ScoreConfig};
use self_indicator::linalg::NormalizationMode;
use self_indicator::oracle::run_trials;
use self_indicator::pipeline::{
    delta_sweep, k_sweep, load_pairs, load_problem, pair_accuracy_grid, LoadedProblem, PairCell, SweepRow,
};
use self_indicator::reprio::{load_manifest, load_pair_manifest, to_json_text, write_scores, ScoreReport};
use self_indicator::synth::{write_candidate_set, write_pair_set};
use self_indicator::voting::Weighting;

use crate::render;
use crate::{Cli, Command, ScoreArgs};

pub const PAIR_EVAL_FORMAT: &str = "self-indicator/pair-eval/v1";

/// Accuracies published for real-model bundles; shown for comparison, never enforced.
const REFERENCE_ACCURACIES: [f64; 3] = [0.724, 0.783, 0.792];

fn output_path(out: Option<PathBuf>, out_dir: &Path, default_name: &str) -> Result<PathBuf> {
    let path = out.unwrap_or_else(|| out_dir.join(default_name));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_scored(manifest: &Path, args: &ScoreArgs) -> Result<LoadedProblem> {
    let loaded = load_manifest(manifest)?;
    if let Some(k) = args.k {
        if k == 0 || k > loaded.k() {
            bail!("{}: --k {k} outside 1..={}", manifest.display(), loaded.k());
        }
    }
    Ok(load_problem(loaded, args.mode, args.k)?)
}

fn build_report(problem: &LoadedProblem, args: &ScoreArgs, weighting: Weighting) -> Result<ScoreReport> {
    let mut report = problem.report(&args.config(), weighting)?;
    if let Some(config) = report.config.as_mut() {
        config.k_cap = args.k;
    }
    Ok(report)
}

pub fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir;
    match cli.command {
        Command::Score { manifest, out, score, timing } => {
            let start = Instant::now();
            let problem = load_scored(&manifest, &score)?;
            let mut report = build_report(&problem, &score, Weighting::Indicator)?;
            if timing {
                report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            let path = output_path(out, &out_dir, &format!("{}.scores.json", report.problem_id))?;
            write_scores(&report, &path)?;
            print!("{}", render::scores_table(&report));
            info!("wrote {}", path.display());
        }
        Command::Vote { manifest, out, score, baseline } => {
            let problem = load_scored(&manifest, &score)?;
            let report = build_report(&problem, &score, baseline)?;
            let Some(vote) = &report.vote else {
                bail!("{}: no candidate has an extractable answer", manifest.display());
            };
            let winner = vote.winner.clone();
            let path = output_path(out, &out_dir, &format!("{}.vote.json", report.problem_id))?;
            write_scores(&report, &path)?;
            println!("{winner}");
            info!("wrote {}", path.display());
        }
        Command::EvalPairs { pairs, out, delta_grid, max_len_diff, combine, mode } => {
            eval_pairs(&pairs, out, &out_dir, &delta_grid, &max_len_diff, combine, mode)?;
        }
        Command::Oracle { oracle, out } => {
            let config = oracle.config();
            let report = run_trials(&config)?;
            let path = output_path(out, &out_dir, "oracle.json")?;
            write_text(&path, &to_json_text(&report)?)?;
            print!("{}", render::oracle_table(&report));
            info!("wrote {}", path.display());
        }
        Command::Sweep { manifests, delta_grid, k_grid, out, score } => {
            sweep(&manifests, delta_grid, k_grid, out, &out_dir, &score)?;
        }
        Command::SynthPairs { oracle, count } => {
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let path = write_pair_set(&oracle.config(), count, &out_dir)?;
            println!("{}", path.display());
        }
        Command::SynthCandidates { oracle, problem_id, answers, ground_truth, first_index } => {
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let path = write_candidate_set(&oracle.config(), &problem_id, &answers, &ground_truth, first_index, &out_dir)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PairEvalConfig<'a> {
    pairs: String,
    combine: CombineMode,
    normalization: NormalizationMode,
    delta_grid: &'a [f64],
    max_len_diff: &'a [Option<usize>],
}

#[derive(Debug, Serialize)]
struct PairEvalReport<'a> {
    format: &'static str,
    config: PairEvalConfig<'a>,
    cells: Vec<PairCell>,
}

fn eval_pairs(
    pairs: &Path,
    out: Option<PathBuf>,
    out_dir: &Path,
    deltas: &[f64],
    thresholds: &[usize],
    combine: CombineMode,
    mode: NormalizationMode,
) -> Result<()> {
    let manifest = load_pair_manifest(pairs)?;
    let loaded = load_pairs(&manifest, mode)?;
    let filters: Vec<Option<usize>> = std::iter::once(None).chain(thresholds.iter().copied().map(Some)).collect();
    let cells = pair_accuracy_grid(&loaded, deltas, combine, &filters)?;
    let report = PairEvalReport {
        format: PAIR_EVAL_FORMAT,
        config: PairEvalConfig {
            pairs: pairs.display().to_string(),
            combine,
            normalization: mode,
            delta_grid: deltas,
            max_len_diff: &filters,
        },
        cells,
    };
    let path = output_path(out, out_dir, "pair-eval.json")?;
    write_text(&path, &to_json_text(&report)?)?;
    print!("{}", render::pair_table(&report.cells));
    let refs: Vec<String> = REFERENCE_ACCURACIES.iter().map(|a| format!("{a:.3}")).collect();
    println!("# reference accuracies for real-model bundles (informational): {}", refs.join(" / "));
    info!("wrote {}", path.display());
    Ok(())
}

fn sweep(
    manifests: &[PathBuf],
    delta_grid: Option<Vec<f64>>,
    k_grid: Option<Vec<usize>>,
    out: Option<PathBuf>,
    out_dir: &Path,
    args: &ScoreArgs,
) -> Result<()> {
    let problems = manifests
        .iter()
        .map(|m| Ok(load_problem(load_manifest(m)?, args.mode, None)?))
        .collect::<Result<Vec<_>>>()?;
    let (rows, name): (Vec<SweepRow>, &str) = match (delta_grid, k_grid) {
        (Some(deltas), None) => (delta_sweep(&problems, &deltas, args.combine)?, "sweep-delta.tsv"),
        (None, Some(ks)) => (k_sweep(&problems, &ks, &args.config())?, "sweep-k.tsv"),
        _ => bail!("give exactly one of --delta-grid and --k-grid"),
    };
    let config = ScoreConfig { delta: args.delta, combine: args.combine, normalization: args.mode };
    let text = render::sweep_tsv(&rows, &config, manifests);
    let path = output_path(out, out_dir, name)?;
    write_text(&path, &text)?;
    print!("{text}");
    Ok(())
}
