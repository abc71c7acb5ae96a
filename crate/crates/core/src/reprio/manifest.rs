//! Candidate and pair manifests (JSON).
//!
//! Bundle paths are resolved against the directory holding the manifest and
//! must exist at load time. Raw answers are kept verbatim and canonicalized
//! on load.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::answer::{normalize_answer, AnswerError};
use super::bundle::{read_bundle, BundleError, RepresentationBundle};
use crate::indicator::TemplateOrder;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{path}: unsupported manifest version {found} (expected {MANIFEST_VERSION})")]
    Version { path: String, found: u32 },
    #[error("{path}: manifest lists no candidates")]
    NoCandidates { path: String },
    #[error("{path}: duplicate candidate_id `{id}`")]
    DuplicateCandidate { path: String, id: String },
    #[error("{path}: field `{field}` is empty for candidate `{id}`")]
    EmptyField { path: String, id: String, field: &'static str },
    #[error("{path}: candidate `{id}` references missing bundle {bundle}")]
    DanglingBundle { path: String, id: String, bundle: String },
    #[error("{path}: pair {index} has a zero token length")]
    ZeroLength { path: String, index: usize },
    #[error("bundle {path} for candidate `{id}`: {source}")]
    Bundle { path: String, id: String, source: BundleError },
    #[error("bundle {path} for candidate `{id}` is {found}, expected {expected}")]
    BundleOrder { path: String, id: String, expected: TemplateOrder, found: TemplateOrder },
}

/// One candidate line as written in a manifest file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    pub candidate_id: String,
    pub answer_raw: String,
    pub bundle_path_qa: PathBuf,
    pub bundle_path_aq: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateManifestFile {
    pub version: u32,
    pub problem_id: String,
    pub problem_text: String,
    pub candidates: Vec<CandidateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub problem_id: String,
    pub correct: CandidateEntry,
    pub incorrect: CandidateEntry,
    /// Overrides the QA bundle's solution token count when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len_correct: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len_incorrect: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairManifestFile {
    pub version: u32,
    pub pairs: Vec<PairEntry>,
}

/// A validated candidate with resolved paths and a canonical answer.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestCandidate {
    pub candidate_id: String,
    pub answer_raw: String,
    /// `None` when no answer could be extracted; such candidates do not vote.
    pub answer: Option<String>,
    pub bundle_path_qa: PathBuf,
    pub bundle_path_aq: PathBuf,
}

impl ManifestCandidate {
    /// Reads both bundles and stamps them with this candidate's id.
    pub fn load_bundles(&self) -> Result<(RepresentationBundle, RepresentationBundle), ManifestError> {
        let qa = load_tagged(&self.bundle_path_qa, &self.candidate_id, TemplateOrder::QA)?;
        let aq = load_tagged(&self.bundle_path_aq, &self.candidate_id, TemplateOrder::AQ)?;
        Ok((qa, aq))
    }
}

fn load_tagged(path: &Path, id: &str, expected: TemplateOrder) -> Result<RepresentationBundle, ManifestError> {
    let bundle = read_bundle(path).map_err(|source| ManifestError::Bundle {
        path: path.display().to_string(),
        id: id.to_string(),
        source,
    })?;
    if bundle.template_order != expected {
        return Err(ManifestError::BundleOrder {
            path: path.display().to_string(),
            id: id.to_string(),
            expected,
            found: bundle.template_order,
        });
    }
    Ok(bundle.with_candidate_id(id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateManifest {
    pub source: PathBuf,
    pub problem_id: String,
    pub problem_text: String,
    pub candidates: Vec<ManifestCandidate>,
    pub ground_truth: Option<String>,
}

impl CandidateManifest {
    pub fn k(&self) -> usize {
        self.candidates.len()
    }

    /// First `k` candidates in manifest order.
    pub fn truncated(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.candidates.truncate(k);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestPair {
    pub problem_id: String,
    pub correct: ManifestCandidate,
    pub incorrect: ManifestCandidate,
    pub len_correct: Option<usize>,
    pub len_incorrect: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairManifest {
    pub source: PathBuf,
    pub pairs: Vec<ManifestPair>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ManifestError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|source| ManifestError::Parse { path: path.display().to_string(), source })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn resolve_candidate(entry: &CandidateEntry, base: &Path, path: &Path) -> Result<ManifestCandidate, ManifestError> {
    let shown = path.display().to_string();
    let id = &entry.candidate_id;
    if id.is_empty() {
        return Err(ManifestError::EmptyField { path: shown, id: id.clone(), field: "candidate_id" });
    }
    let mut resolved = [PathBuf::new(), PathBuf::new()];
    for (slot, (field, rel)) in resolved
        .iter_mut()
        .zip([("bundle_path_qa", &entry.bundle_path_qa), ("bundle_path_aq", &entry.bundle_path_aq)])
    {
        if rel.as_os_str().is_empty() {
            return Err(ManifestError::EmptyField { path: shown, id: id.clone(), field });
        }
        let full = base.join(rel);
        if !full.is_file() {
            return Err(ManifestError::DanglingBundle { path: shown, id: id.clone(), bundle: full.display().to_string() });
        }
        *slot = full;
    }
    let answer = match normalize_answer(&entry.answer_raw) {
        Ok(a) => Some(a),
        Err(AnswerError::NoAnswer(_)) => {
            warn!("{shown}: candidate `{id}` has no extractable answer; it will not vote");
            None
        }
    };
    let [bundle_path_qa, bundle_path_aq] = resolved;
    Ok(ManifestCandidate {
        candidate_id: id.clone(),
        answer_raw: entry.answer_raw.clone(),
        answer,
        bundle_path_qa,
        bundle_path_aq,
    })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<CandidateManifest, ManifestError> {
    let path = path.as_ref();
    let file: CandidateManifestFile = read_json(path)?;
    let shown = path.display().to_string();
    if file.version != MANIFEST_VERSION {
        return Err(ManifestError::Version { path: shown, found: file.version });
    }
    if file.candidates.is_empty() {
        return Err(ManifestError::NoCandidates { path: shown });
    }
    let base = base_dir(path);
    let mut seen = HashSet::new();
    let mut candidates = Vec::with_capacity(file.candidates.len());
    for entry in &file.candidates {
        if !seen.insert(entry.candidate_id.as_str()) {
            return Err(ManifestError::DuplicateCandidate { path: shown, id: entry.candidate_id.clone() });
        }
        candidates.push(resolve_candidate(entry, &base, path)?);
    }
    let ground_truth = file.ground_truth.as_deref().and_then(|g| normalize_answer(g).ok());
    Ok(CandidateManifest {
        source: path.to_path_buf(),
        problem_id: file.problem_id,
        problem_text: file.problem_text,
        candidates,
        ground_truth,
    })
}

pub fn load_pair_manifest(path: impl AsRef<Path>) -> Result<PairManifest, ManifestError> {
    let path = path.as_ref();
    let file: PairManifestFile = read_json(path)?;
    let shown = path.display().to_string();
    if file.version != MANIFEST_VERSION {
        return Err(ManifestError::Version { path: shown, found: file.version });
    }
    let base = base_dir(path);
    let mut pairs = Vec::with_capacity(file.pairs.len());
    for (index, entry) in file.pairs.iter().enumerate() {
        if entry.correct.candidate_id == entry.incorrect.candidate_id {
            return Err(ManifestError::DuplicateCandidate { path: shown, id: entry.correct.candidate_id.clone() });
        }
        if entry.len_correct == Some(0) || entry.len_incorrect == Some(0) {
            return Err(ManifestError::ZeroLength { path: shown, index });
        }
        pairs.push(ManifestPair {
            problem_id: entry.problem_id.clone(),
            correct: resolve_candidate(&entry.correct, &base, path)?,
            incorrect: resolve_candidate(&entry.incorrect, &base, path)?,
            len_correct: entry.len_correct,
            len_incorrect: entry.len_incorrect,
        });
    }
    Ok(PairManifest { source: path.to_path_buf(), pairs })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ManifestError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| ManifestError::Parse { path: path.display().to_string(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })
}

pub fn write_manifest(file: &CandidateManifestFile, path: impl AsRef<Path>) -> Result<(), ManifestError> {
    write_json(file, path.as_ref())
}

pub fn write_pair_manifest(file: &PairManifestFile, path: impl AsRef<Path>) -> Result<(), ManifestError> {
    write_json(file, path.as_ref())
}
