//! Position weights, weighted majority voting and pairwise decisions.
//!
//! Candidates are ordered by ascending indicator score; the candidate at
//! 1-based position `p` out of `K` gets weight `1 + 0.5 * (K - p)`, so the
//! lowest score carries the most weight.

use std::cmp::Ordering;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicator::IndicatorScore;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VotingError {
    #[error("no candidates to vote over")]
    Empty,
    #[error("score of candidate `{id}` is not finite ({score})")]
    NonFiniteScore { id: String, score: f64 },
    #[error("candidate `{id}` has no score")]
    Unscored { id: String },
    #[error("candidate `{id}` has an empty answer")]
    EmptyAnswer { id: String },
    #[error("{candidates} candidates but {weights} weights")]
    WeightCount { candidates: usize, weights: usize },
    #[error("positions are not a permutation of 1..={k}")]
    BadPositions { k: usize },
    #[error("no pairs left after the length filter (max_len_diff = {max_len_diff:?})")]
    EmptySubset { max_len_diff: Option<usize> },
    #[error("all {ties} retained pairs are score ties; accuracy is undefined")]
    AllTies { ties: usize },
    #[error("pair for problem `{problem_id}` has a zero token length")]
    ZeroLength { problem_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub candidate_id: String,
    /// Canonical answer.
    pub answer: String,
    pub score: Option<IndicatorScore>,
}

impl Candidate {
    pub fn new(candidate_id: impl Into<String>, answer: impl Into<String>) -> Self {
        Self { candidate_id: candidate_id.into(), answer: answer.into(), score: None }
    }

    pub fn with_score(mut self, score: IndicatorScore) -> Self {
        self.score = Some(score);
        self
    }

    fn score_value(&self) -> Option<f64> {
        self.score.as_ref().map(|s| s.score)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Position weights from indicator scores.
    #[default]
    Indicator,
    /// Uniform weights (plain self-consistency majority vote).
    SelfConsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteResult {
    pub winner: String,
    /// Accumulated weight per answer, in order of first appearance.
    pub tally: IndexMap<String, f64>,
    /// 1-based position in ascending score order, keyed by candidate id.
    pub positions: IndexMap<String, usize>,
    pub weights: IndexMap<String, f64>,
}

/// 1-based positions in ascending score order; equal scores keep input order.
pub fn rank_scores(scores: &[f64]) -> Result<Vec<usize>, (usize, f64)> {
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err((i, scores[i]));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut positions = vec![0; scores.len()];
    for (pos, idx) in order.into_iter().enumerate() {
        positions[idx] = pos + 1;
    }
    Ok(positions)
}

/// Positions of scored candidates, indexed like the input.
pub fn rank_candidates(scores: &[IndicatorScore]) -> Result<Vec<usize>, VotingError> {
    if scores.is_empty() {
        return Err(VotingError::Empty);
    }
    let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
    rank_scores(&values).map_err(|(i, score)| VotingError::NonFiniteScore { id: scores[i].candidate_id.clone(), score })
}

pub fn assign_weights(positions: &[usize], k: usize) -> Result<Vec<f64>, VotingError> {
    let mut seen = vec![false; k];
    for &p in positions {
        if p == 0 || p > k || std::mem::replace(&mut seen[p - 1], true) {
            return Err(VotingError::BadPositions { k });
        }
    }
    if positions.len() != k {
        return Err(VotingError::BadPositions { k });
    }
    Ok(positions.iter().map(|&p| 1.0 + 0.5 * (k - p) as f64).collect())
}

fn positions_of(candidates: &[Candidate]) -> Result<Vec<usize>, VotingError> {
    let scores: Option<Vec<f64>> = candidates.iter().map(Candidate::score_value).collect();
    match scores {
        Some(scores) => rank_scores(&scores).map_err(|(i, score)| VotingError::NonFiniteScore {
            id: candidates[i].candidate_id.clone(),
            score,
        }),
        None => Ok((1..=candidates.len()).collect()),
    }
}

/// Tallies weights per answer. Ties go to the answer of the position-1
/// candidate if it is among the tied answers, otherwise to the
/// lexicographically smallest tied answer.
pub fn weighted_majority_vote(candidates: &[Candidate], weights: &[f64]) -> Result<VoteResult, VotingError> {
    if candidates.is_empty() {
        return Err(VotingError::Empty);
    }
    if candidates.len() != weights.len() {
        return Err(VotingError::WeightCount { candidates: candidates.len(), weights: weights.len() });
    }
    if let Some(c) = candidates.iter().find(|c| c.answer.is_empty()) {
        return Err(VotingError::EmptyAnswer { id: c.candidate_id.clone() });
    }
    let positions = positions_of(candidates)?;

    let mut tally: IndexMap<String, f64> = IndexMap::new();
    for (c, &w) in candidates.iter().zip(weights) {
        *tally.entry(c.answer.clone()).or_insert(0.0) += w;
    }
    let best_total = tally.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<&String> = tally.iter().filter(|(_, &t)| t == best_total).map(|(a, _)| a).collect();
    let best_idx = positions.iter().position(|&p| p == 1).expect("positions are a permutation");
    let best_answer = &candidates[best_idx].answer;
    let winner = if tied.contains(&best_answer) {
        best_answer.clone()
    } else {
        (*tied.iter().min().expect("at least one answer")).clone()
    };

    Ok(VoteResult {
        winner,
        tally,
        positions: candidates.iter().zip(&positions).map(|(c, &p)| (c.candidate_id.clone(), p)).collect(),
        weights: candidates.iter().zip(weights).map(|(c, &w)| (c.candidate_id.clone(), w)).collect(),
    })
}

pub fn self_consistency_vote(candidates: &[Candidate]) -> Result<VoteResult, VotingError> {
    weighted_majority_vote(candidates, &vec![1.0; candidates.len()])
}

/// Ranks scored candidates, assigns weights and votes.
pub fn vote(candidates: &[Candidate], weighting: Weighting) -> Result<VoteResult, VotingError> {
    if candidates.is_empty() {
        return Err(VotingError::Empty);
    }
    match weighting {
        Weighting::SelfConsistency => self_consistency_vote(candidates),
        Weighting::Indicator => {
            if let Some(c) = candidates.iter().find(|c| c.score.is_none()) {
                return Err(VotingError::Unscored { id: c.candidate_id.clone() });
            }
            let positions = positions_of(candidates)?;
            let weights = assign_weights(&positions, candidates.len())?;
            weighted_majority_vote(candidates, &weights)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairDecision {
    pub choice: Choice,
    pub tie: bool,
}

/// Picks the candidate with the strictly lower score; exact ties pick the first.
pub fn pairwise_decision(score_1: f64, score_2: f64) -> PairDecision {
    if score_2 < score_1 {
        PairDecision { choice: Choice::Second, tie: false }
    } else {
        PairDecision { choice: Choice::First, tie: score_1 == score_2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub problem_id: String,
    pub correct: Candidate,
    pub incorrect: Candidate,
    pub len_correct: usize,
    pub len_incorrect: usize,
}

impl SolutionPair {
    pub fn len_diff(&self) -> usize {
        self.len_correct.abs_diff(self.len_incorrect)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Correct decisions over retained, non-tied pairs.
    pub accuracy: f64,
    /// Pairs retained by the length filter, ties included.
    pub n_used: usize,
    pub n_ties: usize,
    pub n_correct: usize,
}

/// Fraction of pairs where the correct solution has the strictly lower score.
///
/// With `max_len_diff = Some(t)` only pairs whose token lengths differ by
/// less than `t` are kept. Ties are counted separately and excluded from
/// both numerator and denominator.
pub fn decision_accuracy(pairs: &[SolutionPair], max_len_diff: Option<usize>) -> Result<AccuracyReport, VotingError> {
    let mut n_used = 0;
    let mut n_ties = 0;
    let mut n_correct = 0;
    for pair in pairs {
        if pair.len_correct == 0 || pair.len_incorrect == 0 {
            return Err(VotingError::ZeroLength { problem_id: pair.problem_id.clone() });
        }
        if max_len_diff.is_some_and(|t| pair.len_diff() >= t) {
            continue;
        }
        let sc = pair
            .correct
            .score_value()
            .ok_or_else(|| VotingError::Unscored { id: pair.correct.candidate_id.clone() })?;
        let si = pair
            .incorrect
            .score_value()
            .ok_or_else(|| VotingError::Unscored { id: pair.incorrect.candidate_id.clone() })?;
        for (c, s) in [(&pair.correct, sc), (&pair.incorrect, si)] {
            if !s.is_finite() {
                return Err(VotingError::NonFiniteScore { id: c.candidate_id.clone(), score: s });
            }
        }
        n_used += 1;
        let decision = pairwise_decision(sc, si);
        if decision.tie {
            n_ties += 1;
        } else if decision.choice == Choice::First {
            n_correct += 1;
        }
    }
    if n_used == 0 {
        return Err(VotingError::EmptySubset { max_len_diff });
    }
    if n_ties == n_used {
        return Err(VotingError::AllTies { ties: n_ties });
    }
    Ok(AccuracyReport {
        accuracy: n_correct as f64 / (n_used - n_ties) as f64,
        n_used,
        n_ties,
        n_correct,
    })
}
