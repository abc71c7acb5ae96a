//! Self-indicator scoring: normalized correlation ranks under the QA and AQ
//! template orders, combined into one score per candidate. Lower is better.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{correlation_matrix, normalized_rank, LinalgError, NormalizationMode};
use crate::reprio::RepresentationBundle;

pub const DEFAULT_DELTA: f64 = 1.75;
pub const DEFAULT_LAYER: u32 = 26;

const QUESTION: &str = "Question: ";
const ANSWER: &str = "Answer: ";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("problem text is empty")]
    EmptyProblem,
    #[error("solution text is empty")]
    EmptySolution,
    #[error("bundles belong to different candidates ({qa} vs {aq})")]
    CandidateMismatch { qa: String, aq: String },
    #[error("bundles come from different representation models ({qa} vs {aq})")]
    ModelMismatch { qa: String, aq: String },
    #[error("expected a {expected} bundle, got {found}")]
    WrongOrder { expected: TemplateOrder, found: TemplateOrder },
    #[error("rank components must be non-negative and finite (got {0}, {1})")]
    InvalidRank(f64, f64),
    #[error("unknown combine mode `{0}` (expected add or mul)")]
    UnknownCombine(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateOrder {
    QA,
    AQ,
}

impl fmt::Display for TemplateOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateOrder::QA => "QA",
            TemplateOrder::AQ => "AQ",
        })
    }
}

/// Rendered prompt text plus the byte spans of the problem and the solution inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedTemplate {
    pub text: String,
    pub problem_span: Range<usize>,
    pub solution_span: Range<usize>,
}

impl RenderedTemplate {
    pub fn problem(&self) -> &str {
        &self.text[self.problem_span.clone()]
    }

    pub fn solution(&self) -> &str {
        &self.text[self.solution_span.clone()]
    }
}

/// Renders a template and records where the problem and solution landed.
pub fn render_template(
    problem: &str,
    solution: &str,
    order: TemplateOrder,
) -> Result<RenderedTemplate, IndicatorError> {
    if problem.is_empty() {
        return Err(IndicatorError::EmptyProblem);
    }
    if solution.is_empty() {
        return Err(IndicatorError::EmptySolution);
    }
    let (first_label, first, second_label, second) = match order {
        TemplateOrder::QA => (QUESTION, problem, ANSWER, solution),
        TemplateOrder::AQ => (ANSWER, solution, QUESTION, problem),
    };
    let mut text = String::with_capacity(first_label.len() + first.len() + second_label.len() + second.len() + 1);
    text.push_str(first_label);
    let first_span = text.len()..text.len() + first.len();
    text.push_str(first);
    text.push(' ');
    text.push_str(second_label);
    let second_span = text.len()..text.len() + second.len();
    text.push_str(second);
    let (problem_span, solution_span) = match order {
        TemplateOrder::QA => (first_span, second_span),
        TemplateOrder::AQ => (second_span, first_span),
    };
    Ok(RenderedTemplate { text, problem_span, solution_span })
}

/// `"Question: {problem} Answer: {solution}"` or its swapped inverse.
pub fn build_template_text(
    problem: &str,
    solution: &str,
    order: TemplateOrder,
) -> Result<String, IndicatorError> {
    render_template(problem, solution, order).map(|t| t.text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    #[default]
    Add,
    Mul,
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombineMode::Add => "add",
            CombineMode::Mul => "mul",
        })
    }
}

impl FromStr for CombineMode {
    type Err = IndicatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add" => Ok(CombineMode::Add),
            "mul" => Ok(CombineMode::Mul),
            other => Err(IndicatorError::UnknownCombine(other.to_string())),
        }
    }
}

pub fn combine_ranks(rank_qa: f64, rank_aq: f64, mode: CombineMode) -> Result<f64, IndicatorError> {
    if !(rank_qa >= 0.0 && rank_aq >= 0.0) || !rank_qa.is_finite() || !rank_aq.is_finite() {
        return Err(IndicatorError::InvalidRank(rank_qa, rank_aq));
    }
    Ok(match mode {
        CombineMode::Add => rank_qa + rank_aq,
        CombineMode::Mul => rank_qa * rank_aq,
    })
}

/// Everything that determines a score besides the bundles themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub delta: f64,
    pub combine: CombineMode,
    pub normalization: NormalizationMode,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA, combine: CombineMode::Add, normalization: NormalizationMode::Raw }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorScore {
    pub candidate_id: String,
    pub rank_qa: f64,
    pub rank_aq: f64,
    pub score: f64,
    pub combine: CombineMode,
    pub delta: f64,
    pub normalization: NormalizationMode,
}

/// Normalized thresholded rank of one bundle's solution-by-problem matrix.
pub fn bundle_rank(
    bundle: &RepresentationBundle,
    delta: f64,
    mode: NormalizationMode,
) -> Result<f64, IndicatorError> {
    let r = correlation_matrix(&bundle.solution_reps, &bundle.problem_reps, mode)?;
    Ok(normalized_rank(&r, delta)?.normalized_rank)
}

/// Scores a candidate from its QA and AQ bundles.
///
/// Both bundles are oriented solution-rows by problem-columns; the template
/// order only changes which forward pass produced the representations. The
/// two bundles may differ in dimension but must share a representation model.
pub fn score_candidate(
    bundle_qa: &RepresentationBundle,
    bundle_aq: &RepresentationBundle,
    config: &ScoreConfig,
) -> Result<IndicatorScore, IndicatorError> {
    if bundle_qa.template_order != TemplateOrder::QA {
        return Err(IndicatorError::WrongOrder { expected: TemplateOrder::QA, found: bundle_qa.template_order });
    }
    if bundle_aq.template_order != TemplateOrder::AQ {
        return Err(IndicatorError::WrongOrder { expected: TemplateOrder::AQ, found: bundle_aq.template_order });
    }
    if let (Some(qa), Some(aq)) = (&bundle_qa.candidate_id, &bundle_aq.candidate_id) {
        if qa != aq {
            return Err(IndicatorError::CandidateMismatch { qa: qa.clone(), aq: aq.clone() });
        }
    }
    if bundle_qa.representation_model != bundle_aq.representation_model {
        return Err(IndicatorError::ModelMismatch {
            qa: bundle_qa.representation_model.clone(),
            aq: bundle_aq.representation_model.clone(),
        });
    }
    let rank_qa = bundle_rank(bundle_qa, config.delta, config.normalization)?;
    let rank_aq = bundle_rank(bundle_aq, config.delta, config.normalization)?;
    let score = combine_ranks(rank_qa, rank_aq, config.combine)?;
    let candidate_id = bundle_qa
        .candidate_id
        .clone()
        .or_else(|| bundle_aq.candidate_id.clone())
        .unwrap_or_default();
    Ok(IndicatorScore {
        candidate_id,
        rank_qa,
        rank_aq,
        score,
        combine: config.combine,
        delta: config.delta,
        normalization: config.normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RepMatrix;

    #[test]
    fn qa_template() {
        assert_eq!(build_template_text("2+2=?", "4", TemplateOrder::QA).unwrap(), "Question: 2+2=? Answer: 4");
    }

    #[test]
    fn aq_template() {
        assert_eq!(build_template_text("2+2=?", "4", TemplateOrder::AQ).unwrap(), "Answer: 4 Question: 2+2=?");
    }

    #[test]
    fn empty_inputs_rejected() {
        assert_eq!(build_template_text("", "4", TemplateOrder::QA), Err(IndicatorError::EmptyProblem));
        assert_eq!(build_template_text("p", "", TemplateOrder::AQ), Err(IndicatorError::EmptySolution));
    }

    #[test]
    fn spans_recover_inputs() {
        let t = render_template("What is 7·6?", "It is 42.", TemplateOrder::AQ).unwrap();
        assert_eq!(t.problem(), "What is 7·6?");
        assert_eq!(t.solution(), "It is 42.");
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine_ranks(0.0, 0.0, CombineMode::Add).unwrap(), 0.0);
        assert_eq!(combine_ranks(1.0, 0.37, CombineMode::Mul).unwrap(), 0.37);
        assert!((combine_ranks(0.2, 0.5, CombineMode::Add).unwrap() - 0.7).abs() < 1e-15);
        assert!((combine_ranks(0.30, 0.45, CombineMode::Add).unwrap() - 0.75).abs() < 1e-15);
        assert!((combine_ranks(0.30, 0.45, CombineMode::Mul).unwrap() - 0.135).abs() < 1e-15);
        assert!(combine_ranks(-0.1, 0.5, CombineMode::Add).is_err());
        assert_eq!("max".parse::<CombineMode>(), Err(IndicatorError::UnknownCombine("max".into())));
    }

    fn bundle(order: TemplateOrder, model: &str, id: &str) -> RepresentationBundle {
        let problem = RepMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let solution = RepMatrix::from_rows(&[[2.0, 0.0, 0.0], [0.0, 0.0, 5.0], [4.0, 0.0, 0.0], [0.0, 3.0, 0.0]]).unwrap();
        RepresentationBundle::new(order, model, 26, problem, solution).unwrap().with_candidate_id(id)
    }

    #[test]
    fn score_from_bundles() {
        let qa = bundle(TemplateOrder::QA, "m", "c0");
        let aq = bundle(TemplateOrder::AQ, "m", "c0");
        // singular values of the 4x2 matrix are sqrt(20) and 3; delta 1.75 keeps both
        let s = score_candidate(&qa, &aq, &ScoreConfig::default()).unwrap();
        assert_eq!(s.rank_qa, 0.5);
        assert_eq!(s.rank_aq, 0.5);
        assert_eq!(s.score, 1.0);
        assert_eq!(s.candidate_id, "c0");
        let cfg = ScoreConfig { delta: 3.5, ..ScoreConfig::default() };
        assert_eq!(score_candidate(&qa, &aq, &cfg).unwrap().score, 0.5);
    }

    #[test]
    fn mismatches_rejected() {
        let qa = bundle(TemplateOrder::QA, "m", "c0");
        let cfg = ScoreConfig::default();
        assert!(matches!(
            score_candidate(&qa, &bundle(TemplateOrder::AQ, "m", "c1"), &cfg),
            Err(IndicatorError::CandidateMismatch { .. })
        ));
        assert!(matches!(
            score_candidate(&qa, &bundle(TemplateOrder::AQ, "other", "c0"), &cfg),
            Err(IndicatorError::ModelMismatch { .. })
        ));
        assert!(matches!(
            score_candidate(&qa, &bundle(TemplateOrder::QA, "m", "c0"), &cfg),
            Err(IndicatorError::WrongOrder { .. })
        ));
    }

    #[test]
    fn dimensions_may_differ_between_orders() {
        let qa = bundle(TemplateOrder::QA, "m", "c0");
        let p = RepMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let s = RepMatrix::from_rows(&[[2.0, 1.0], [1.0, 1.0]]).unwrap();
        let aq = RepresentationBundle::new(TemplateOrder::AQ, "m", 26, p, s).unwrap().with_candidate_id("c0");
        let score = score_candidate(&qa, &aq, &ScoreConfig { delta: 0.0, ..Default::default() }).unwrap();
        assert_eq!(score.rank_aq, 0.5);
    }
}
