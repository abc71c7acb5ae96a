//! Score reports (JSON). The configuration echo is mandatory; timing is optional
//! and left out of reproducible runs so reports can be compared byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicator::{CombineMode, IndicatorScore};
use crate::linalg::NormalizationMode;
use crate::voting::{VoteResult, Weighting};

pub const SCORE_REPORT_FORMAT: &str = "self-indicator/score-report/v1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report has no configuration echo")]
    MissingConfig,
    #[error("report format `{found}` is not {SCORE_REPORT_FORMAT}")]
    Format { found: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

/// Everything needed to re-run a scoring pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub delta: f64,
    pub combine: CombineMode,
    pub normalization: NormalizationMode,
    pub layer: u32,
    pub representation_model: String,
    pub weighting: Weighting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedCandidate {
    pub candidate_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub format: String,
    pub config: Option<ConfigEcho>,
    pub problem_id: String,
    pub scores: Vec<IndicatorScore>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<ExcludedCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote: Option<VoteResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl ScoreReport {
    pub fn new(config: ConfigEcho, problem_id: impl Into<String>) -> Self {
        Self {
            format: SCORE_REPORT_FORMAT.to_string(),
            config: Some(config),
            problem_id: problem_id.into(),
            scores: Vec::new(),
            excluded: Vec::new(),
            vote: None,
            ground_truth: None,
            timing_ms: None,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn render_scores(report: &ScoreReport) -> Result<String, ReportError> {
    if report.config.is_none() {
        return Err(ReportError::MissingConfig);
    }
    to_json_text(report).map_err(|source| ReportError::Json { path: "<memory>".into(), source })
}

pub fn write_scores(report: &ScoreReport, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    let text = render_scores(report)?;
    fs::write(path, text).map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreReport, ReportError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io { path: shown.clone(), source })?;
    let report: ScoreReport = serde_json::from_str(&text).map_err(|source| ReportError::Json { path: shown, source })?;
    if report.format != SCORE_REPORT_FORMAT {
        return Err(ReportError::Format { found: report.format });
    }
    if report.config.is_none() {
        return Err(ReportError::MissingConfig);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voting::{vote, Candidate};

    fn echo() -> ConfigEcho {
        ConfigEcho {
            delta: 1.75,
            combine: CombineMode::Add,
            normalization: NormalizationMode::Raw,
            layer: 26,
            representation_model: "m".into(),
            weighting: Weighting::Indicator,
            k_cap: None,
        }
    }

    fn sample() -> ScoreReport {
        let mut r = ScoreReport::new(echo(), "p0");
        let s = IndicatorScore {
            candidate_id: "c0".into(),
            rank_qa: 0.25,
            rank_aq: 0.5,
            score: 0.75,
            combine: CombineMode::Add,
            delta: 1.75,
            normalization: NormalizationMode::Raw,
        };
        r.vote = Some(vote(&[Candidate::new("c0", "7").with_score(s.clone())], Weighting::Indicator).unwrap());
        r.scores.push(s);
        r
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let report = sample();
        write_scores(&report, &path).unwrap();
        assert_eq!(read_scores(&path).unwrap(), report);
    }

    #[test]
    fn missing_config_rejected_at_write() {
        let dir = tempfile::tempdir().unwrap();
        let mut report = sample();
        report.config = None;
        assert!(matches!(write_scores(&report, dir.path().join("r.json")), Err(ReportError::MissingConfig)));
    }
}
