//! Plain-text tables over the structured outputs.

use std::fmt::Write;
use std::path::PathBuf;

use self_indicator::indicator::ScoreConfig;
use self_indicator::oracle::OracleReport;
use self_indicator::pipeline::{PairCell, SweepParameter, SweepRow};
use self_indicator::reprio::ScoreReport;
use self_indicator::voting::Weighting;

fn method_name(w: Weighting) -> &'static str {
    match w {
        Weighting::Indicator => "indicator",
        Weighting::SelfConsistency => "self-consistency",
    }
}

pub fn scores_table(report: &ScoreReport) -> String {
    let mut s = String::from("candidate_id\trank_qa\trank_aq\tscore\tposition\tweight\n");
    for score in &report.scores {
        let id = &score.candidate_id;
        let position = report.vote.as_ref().and_then(|v| v.positions.get(id));
        let weight = report.vote.as_ref().and_then(|v| v.weights.get(id));
        let _ = writeln!(
            s,
            "{id}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
            score.rank_qa,
            score.rank_aq,
            score.score,
            position.map_or("-".to_string(), |p| p.to_string()),
            weight.map_or("-".to_string(), |w| format!("{w:.1}")),
        );
    }
    for ex in &report.excluded {
        let _ = writeln!(s, "# excluded {}: {}", ex.candidate_id, ex.reason);
    }
    if let Some(vote) = &report.vote {
        let _ = writeln!(s, "# winner {}", vote.winner);
    }
    s
}

pub fn pair_table(cells: &[PairCell]) -> String {
    let mut s = String::from("max_len_diff\tdelta\taccuracy\tn_used\tn_ties\tn_correct\n");
    for cell in cells {
        let filter = cell.max_len_diff.map_or("all".to_string(), |t| t.to_string());
        match &cell.result {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "{filter}\t{}\t{:.4}\t{}\t{}\t{}",
                    cell.delta, r.accuracy, r.n_used, r.n_ties, r.n_correct
                );
            }
            Err(msg) => {
                let _ = writeln!(s, "{filter}\t{}\terror: {msg}\t-\t-\t-", cell.delta);
            }
        }
    }
    s
}

pub fn oracle_table(report: &OracleReport) -> String {
    let a = &report.aggregates;
    let c = &report.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# n={} d={} r={} m={} eta={} noise_len={} scalars=[{}, {}] trials={} seed={}",
        c.n, c.d, c.r, c.m, c.eta, c.noise_len, c.scalar_range.0, c.scalar_range.1, c.trials, c.seed
    );
    for (name, value) in [
        ("frac_correct_match", a.frac_correct_match),
        ("frac_incorrect_match", a.frac_incorrect_match),
        ("frac_incorrect_above", a.frac_incorrect_above),
        ("frac_krylov_match", a.frac_krylov_match),
        ("frac_krylov_stacked_match", a.frac_krylov_stacked_match),
        ("frac_lemma_match", a.frac_lemma_match),
        ("mean_rank_gap", a.mean_rank_gap),
    ] {
        let _ = writeln!(s, "{name}\t{value:.4}");
    }
    let _ = writeln!(s, "total_resamples\t{}", a.total_resamples);
    let _ = writeln!(s, "rank\tcorrect\tincorrect");
    let ranks: std::collections::BTreeSet<usize> =
        a.correct_rank_counts.keys().chain(a.incorrect_rank_counts.keys()).copied().collect();
    for rank in ranks {
        let _ = writeln!(
            s,
            "{rank}\t{}\t{}",
            a.correct_rank_counts.get(&rank).unwrap_or(&0),
            a.incorrect_rank_counts.get(&rank).unwrap_or(&0)
        );
    }
    s
}

pub fn sweep_tsv(rows: &[SweepRow], config: &ScoreConfig, manifests: &[PathBuf]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# combine={} normalization={} delta={} manifests={}",
        config.combine,
        config.normalization,
        config.delta,
        manifests.iter().map(|m| m.display().to_string()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(s, "parameter\tvalue\tmethod\tn_problems\tn_correct\taccuracy");
    for row in rows {
        let parameter = match row.parameter {
            SweepParameter::Delta => "delta",
            SweepParameter::K => "k",
        };
        let _ = writeln!(
            s,
            "{parameter}\t{}\t{}\t{}\t{}\t{:.4}",
            row.value,
            method_name(row.method),
            row.n_problems,
            row.n_correct,
            row.accuracy
        );
    }
    s
}
