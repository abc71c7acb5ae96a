//! Manifest-level scoring, voting, pair evaluation and parameter sweeps.
//!
//! Bundles are read once and reduced to their singular-value spectra; every
//! `delta` on a grid is then a cheap re-threshold of the cached spectra.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicator::{combine_ranks, CombineMode, IndicatorError, IndicatorScore, ScoreConfig, TemplateOrder};
use crate::linalg::{correlation_matrix, thresholded_rank, LinalgError, NormalizationMode};
use crate::reprio::{
    CandidateManifest, ConfigEcho, ExcludedCandidate, ManifestCandidate, ManifestError, PairManifest,
    RepresentationBundle, ScoreReport,
};
use crate::voting::{self, AccuracyReport, Candidate, SolutionPair, VoteResult, VotingError, Weighting};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("candidate `{id}`: {source}")]
    Indicator { id: String, source: IndicatorError },
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{manifest}: bundles disagree on {field} (`{first}` vs `{other}`)")]
    Inconsistent { manifest: String, field: &'static str, first: String, other: String },
    #[error("{manifest}: no candidate has an extractable answer")]
    NoVoters { manifest: String },
    #[error("{manifest}: k = {k} exceeds the {available} candidates available")]
    KTooLarge { manifest: String, k: usize, available: usize },
    #[error("{manifest}: no ground truth answer, needed for accuracy")]
    NoGroundTruth { manifest: String },
    #[error("empty grid")]
    EmptyGrid,
}

/// Spectrum of one bundle's correlation matrix plus its solution token count.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSpectrum {
    pub spectrum: Vec<f64>,
    pub m: usize,
}

impl BundleSpectrum {
    pub fn from_bundle(bundle: &RepresentationBundle, mode: NormalizationMode) -> Result<Self, LinalgError> {
        let r = correlation_matrix(&bundle.solution_reps, &bundle.problem_reps, mode)?;
        Ok(Self { spectrum: r.spectrum()?.to_vec(), m: r.m() })
    }

    pub fn normalized_rank(&self, delta: f64, mode: NormalizationMode) -> Result<f64, LinalgError> {
        let sigma_max = self.spectrum.first().copied().filter(|&s| s > 0.0).unwrap_or(1.0);
        Ok(thresholded_rank(&self.spectrum, delta, mode, sigma_max)? as f64 / self.m as f64)
    }
}

/// Both template spectra of one candidate, computed under a fixed normalization mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSpectra {
    pub candidate_id: String,
    pub mode: NormalizationMode,
    pub qa: BundleSpectrum,
    pub aq: BundleSpectrum,
    pub representation_model: String,
    pub layer: u32,
}

impl CandidateSpectra {
    pub fn from_bundles(
        qa: &RepresentationBundle,
        aq: &RepresentationBundle,
        mode: NormalizationMode,
    ) -> Result<Self, IndicatorError> {
        if qa.template_order != TemplateOrder::QA {
            return Err(IndicatorError::WrongOrder { expected: TemplateOrder::QA, found: qa.template_order });
        }
        if aq.template_order != TemplateOrder::AQ {
            return Err(IndicatorError::WrongOrder { expected: TemplateOrder::AQ, found: aq.template_order });
        }
        if let (Some(a), Some(b)) = (&qa.candidate_id, &aq.candidate_id) {
            if a != b {
                return Err(IndicatorError::CandidateMismatch { qa: a.clone(), aq: b.clone() });
            }
        }
        if qa.representation_model != aq.representation_model {
            return Err(IndicatorError::ModelMismatch {
                qa: qa.representation_model.clone(),
                aq: aq.representation_model.clone(),
            });
        }
        Ok(Self {
            candidate_id: qa.candidate_id.clone().or_else(|| aq.candidate_id.clone()).unwrap_or_default(),
            mode,
            qa: BundleSpectrum::from_bundle(qa, mode)?,
            aq: BundleSpectrum::from_bundle(aq, mode)?,
            representation_model: qa.representation_model.clone(),
            layer: qa.layer,
        })
    }

    pub fn score(&self, delta: f64, combine: CombineMode) -> Result<IndicatorScore, IndicatorError> {
        let rank_qa = self.qa.normalized_rank(delta, self.mode)?;
        let rank_aq = self.aq.normalized_rank(delta, self.mode)?;
        Ok(IndicatorScore {
            candidate_id: self.candidate_id.clone(),
            rank_qa,
            rank_aq,
            score: combine_ranks(rank_qa, rank_aq, combine)?,
            combine,
            delta,
            normalization: self.mode,
        })
    }
}

fn load_spectra(candidate: &ManifestCandidate, mode: NormalizationMode) -> Result<CandidateSpectra, PipelineError> {
    let (qa, aq) = candidate.load_bundles()?;
    CandidateSpectra::from_bundles(&qa, &aq, mode)
        .map_err(|source| PipelineError::Indicator { id: candidate.candidate_id.clone(), source })
}

/// A manifest with every candidate's spectra loaded.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub manifest: CandidateManifest,
    pub spectra: Vec<CandidateSpectra>,
}

impl LoadedProblem {
    pub fn load(manifest: CandidateManifest, mode: NormalizationMode) -> Result<Self, PipelineError> {
        let spectra = manifest
            .candidates
            .par_iter()
            .map(|c| load_spectra(c, mode))
            .collect::<Result<Vec<_>, _>>()?;
        let shown = manifest.source.display().to_string();
        if let Some(first) = spectra.first() {
            for s in &spectra[1..] {
                if s.representation_model != first.representation_model {
                    return Err(PipelineError::Inconsistent {
                        manifest: shown,
                        field: "representation model",
                        first: first.representation_model.clone(),
                        other: s.representation_model.clone(),
                    });
                }
                if s.layer != first.layer {
                    return Err(PipelineError::Inconsistent {
                        manifest: shown,
                        field: "layer",
                        first: first.layer.to_string(),
                        other: s.layer.to_string(),
                    });
                }
            }
        }
        Ok(Self { manifest, spectra })
    }

    pub fn mode(&self) -> NormalizationMode {
        self.spectra.first().map(|s| s.mode).unwrap_or_default()
    }

    /// First `k` candidates in manifest order.
    pub fn truncated(&self, k: usize) -> Result<Self, PipelineError> {
        if k > self.spectra.len() || k == 0 {
            return Err(PipelineError::KTooLarge {
                manifest: self.manifest.source.display().to_string(),
                k,
                available: self.spectra.len(),
            });
        }
        Ok(Self { manifest: self.manifest.truncated(k), spectra: self.spectra[..k].to_vec() })
    }

    pub fn scores(&self, delta: f64, combine: CombineMode) -> Result<Vec<IndicatorScore>, PipelineError> {
        self.spectra
            .iter()
            .map(|s| s.score(delta, combine).map_err(|source| PipelineError::Indicator { id: s.candidate_id.clone(), source }))
            .collect()
    }

    /// Candidates with a canonical answer, paired with their scores. The rest are returned as exclusions.
    pub fn voters(&self, scores: &[IndicatorScore]) -> (Vec<Candidate>, Vec<ExcludedCandidate>) {
        let mut voters = Vec::new();
        let mut excluded = Vec::new();
        for (c, s) in self.manifest.candidates.iter().zip(scores) {
            match &c.answer {
                Some(a) => voters.push(Candidate::new(c.candidate_id.clone(), a.clone()).with_score(s.clone())),
                None => excluded.push(ExcludedCandidate {
                    candidate_id: c.candidate_id.clone(),
                    reason: format!("no extractable answer in {:?}", c.answer_raw),
                }),
            }
        }
        (voters, excluded)
    }

    pub fn vote(&self, config: &ScoreConfig, weighting: Weighting) -> Result<VoteResult, PipelineError> {
        let scores = self.scores(config.delta, config.combine)?;
        let (voters, _) = self.voters(&scores);
        if voters.is_empty() {
            return Err(PipelineError::NoVoters { manifest: self.manifest.source.display().to_string() });
        }
        Ok(voting::vote(&voters, weighting)?)
    }

    /// Full report: configuration echo, per-candidate scores, exclusions and vote.
    pub fn report(&self, config: &ScoreConfig, weighting: Weighting) -> Result<ScoreReport, PipelineError> {
        let first = self.spectra.first();
        let echo = ConfigEcho {
            delta: config.delta,
            combine: config.combine,
            normalization: config.normalization,
            layer: first.map(|s| s.layer).unwrap_or_default(),
            representation_model: first.map(|s| s.representation_model.clone()).unwrap_or_default(),
            weighting,
            k_cap: None,
        };
        let mut report = ScoreReport::new(echo, self.manifest.problem_id.clone());
        let scores = self.scores(config.delta, config.combine)?;
        let (voters, excluded) = self.voters(&scores);
        report.vote = if voters.is_empty() { None } else { Some(voting::vote(&voters, weighting)?) };
        report.scores = scores;
        report.excluded = excluded;
        report.ground_truth = self.manifest.ground_truth.clone();
        Ok(report)
    }
}

/// Loads a manifest (optionally capped to its first `k_cap` candidates) and scores it.
pub fn load_problem(
    manifest: CandidateManifest,
    mode: NormalizationMode,
    k_cap: Option<usize>,
) -> Result<LoadedProblem, PipelineError> {
    let manifest = match k_cap {
        Some(k) if k < manifest.k() => manifest.truncated(k),
        _ => manifest,
    };
    LoadedProblem::load(manifest, mode)
}

#[derive(Debug, Clone)]
pub struct LoadedPair {
    pub problem_id: String,
    pub correct: CandidateSpectra,
    pub incorrect: CandidateSpectra,
    pub len_correct: usize,
    pub len_incorrect: usize,
}

/// Reads every bundle of a pair manifest once. Token lengths default to the
/// QA bundle's solution row count.
pub fn load_pairs(manifest: &PairManifest, mode: NormalizationMode) -> Result<Vec<LoadedPair>, PipelineError> {
    manifest
        .pairs
        .par_iter()
        .map(|p| {
            let correct = load_spectra(&p.correct, mode)?;
            let incorrect = load_spectra(&p.incorrect, mode)?;
            Ok(LoadedPair {
                problem_id: p.problem_id.clone(),
                len_correct: p.len_correct.unwrap_or(correct.qa.m),
                len_incorrect: p.len_incorrect.unwrap_or(incorrect.qa.m),
                correct,
                incorrect,
            })
        })
        .collect()
}

pub fn score_pairs(pairs: &[LoadedPair], delta: f64, combine: CombineMode) -> Result<Vec<SolutionPair>, PipelineError> {
    pairs
        .iter()
        .map(|p| {
            let score = |s: &CandidateSpectra| {
                s.score(delta, combine).map_err(|source| PipelineError::Indicator { id: s.candidate_id.clone(), source })
            };
            Ok(SolutionPair {
                problem_id: p.problem_id.clone(),
                correct: Candidate::new(p.correct.candidate_id.clone(), "correct").with_score(score(&p.correct)?),
                incorrect: Candidate::new(p.incorrect.candidate_id.clone(), "incorrect").with_score(score(&p.incorrect)?),
                len_correct: p.len_correct,
                len_incorrect: p.len_incorrect,
            })
        })
        .collect()
}

/// One cell of a decision-accuracy table; `result` holds the empty-subset error text when a cell is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCell {
    pub delta: f64,
    pub max_len_diff: Option<usize>,
    pub result: Result<AccuracyReport, String>,
}

pub fn pair_accuracy_grid(
    pairs: &[LoadedPair],
    deltas: &[f64],
    combine: CombineMode,
    filters: &[Option<usize>],
) -> Result<Vec<PairCell>, PipelineError> {
    if deltas.is_empty() || filters.is_empty() {
        return Err(PipelineError::EmptyGrid);
    }
    let mut cells = Vec::with_capacity(deltas.len() * filters.len());
    for &filter in filters {
        for &delta in deltas {
            let scored = score_pairs(pairs, delta, combine)?;
            let result = match voting::decision_accuracy(&scored, filter) {
                Ok(r) => Ok(r),
                Err(e @ (VotingError::EmptySubset { .. } | VotingError::AllTies { .. })) => Err(e.to_string()),
                Err(e) => return Err(e.into()),
            };
            cells.push(PairCell { delta, max_len_diff: filter, result });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Delta,
    K,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub value: f64,
    pub method: Weighting,
    pub n_problems: usize,
    pub n_correct: usize,
    pub accuracy: f64,
}

fn problem_accuracy(
    problems: &[LoadedProblem],
    config: &ScoreConfig,
    weighting: Weighting,
) -> Result<(usize, usize), PipelineError> {
    let mut n_correct = 0;
    for p in problems {
        let truth = p.manifest.ground_truth.as_ref().ok_or_else(|| PipelineError::NoGroundTruth {
            manifest: p.manifest.source.display().to_string(),
        })?;
        match p.vote(config, weighting) {
            Ok(result) if &result.winner == truth => n_correct += 1,
            Ok(_) => {}
            Err(PipelineError::NoVoters { manifest }) => log::warn!("{manifest}: no voters, counted as wrong"),
            Err(e) => return Err(e),
        }
    }
    Ok((problems.len(), n_correct))
}

fn sweep_row(
    parameter: SweepParameter,
    value: f64,
    method: Weighting,
    (n_problems, n_correct): (usize, usize),
) -> SweepRow {
    SweepRow { parameter, value, method, n_problems, n_correct, accuracy: n_correct as f64 / n_problems as f64 }
}

const METHODS: [Weighting; 2] = [Weighting::Indicator, Weighting::SelfConsistency];

/// Final-answer accuracy of both voting methods at each `delta`.
pub fn delta_sweep(problems: &[LoadedProblem], deltas: &[f64], combine: CombineMode) -> Result<Vec<SweepRow>, PipelineError> {
    if deltas.is_empty() || problems.is_empty() {
        return Err(PipelineError::EmptyGrid);
    }
    let mut rows = Vec::new();
    for &delta in deltas {
        let config = ScoreConfig { delta, combine, normalization: problems[0].mode() };
        for method in METHODS {
            rows.push(sweep_row(SweepParameter::Delta, delta, method, problem_accuracy(problems, &config, method)?));
        }
    }
    Ok(rows)
}

/// Final-answer accuracy of both voting methods using only the first `k` candidates.
pub fn k_sweep(problems: &[LoadedProblem], ks: &[usize], config: &ScoreConfig) -> Result<Vec<SweepRow>, PipelineError> {
    if ks.is_empty() || problems.is_empty() {
        return Err(PipelineError::EmptyGrid);
    }
    let mut rows = Vec::new();
    for &k in ks {
        let truncated = problems.iter().map(|p| p.truncated(k)).collect::<Result<Vec<_>, _>>()?;
        for method in METHODS {
            rows.push(sweep_row(SweepParameter::K, k as f64, method, problem_accuracy(&truncated, config, method)?));
        }
    }
    Ok(rows)
}
