//! Correlation-matrix rank as a correctness signal for sampled reasoning paths.
//!
//! * [`linalg`]: correlation matrices, singular values, thresholded rank.
//! * [`indicator`]: QA/AQ templates and the per-candidate score.
//! * [`voting`]: position weights, weighted majority vote, pairwise decisions.
//! * [`oracle`]: synthetic linear-attention model that exercises the rank predictions.
//! * [`reprio`]: bundle files, manifests, answer canonicalization, reports.
//! * [`pipeline`]: manifest-level scoring, voting and evaluation.
//! * [`synth`]: oracle-backed bundle and manifest sets written to disk.

pub mod indicator;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod reprio;
pub mod synth;
pub mod voting;

pub use indicator::{score_candidate, CombineMode, IndicatorScore, ScoreConfig, TemplateOrder};
pub use linalg::{correlation_matrix, normalized_rank, NormalizationMode, RankEstimate, RepMatrix};
pub use reprio::RepresentationBundle;
pub use voting::{Candidate, VoteResult, Weighting};
