//! Writes oracle-generated bundles and manifests to disk, for fixtures and
//! end-to-end checks that need no model access.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::oracle::{synthetic_pair, OracleConfig, OracleError};
use crate::reprio::{
    normalize_answer, write_bundle, write_manifest, write_pair_manifest, BundleError, CandidateEntry,
    CandidateManifestFile, ManifestError, PairEntry, PairManifestFile, RepresentationBundle, MANIFEST_VERSION,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no candidate answers given")]
    NoAnswers,
}

const BUNDLE_DIR: &str = "bundles";

fn bundle_dir(out_dir: &Path) -> Result<PathBuf, SynthError> {
    let dir = out_dir.join(BUNDLE_DIR);
    fs::create_dir_all(&dir).map_err(|source| SynthError::Io { path: dir.display().to_string(), source })?;
    Ok(dir)
}

fn write_entry(
    out_dir: &Path,
    id: &str,
    answer_raw: &str,
    qa: &RepresentationBundle,
    aq: &RepresentationBundle,
) -> Result<CandidateEntry, SynthError> {
    let dir = bundle_dir(out_dir)?;
    let qa_name = format!("{id}.qa.sind");
    let aq_name = format!("{id}.aq.sind");
    write_bundle(qa, dir.join(&qa_name))?;
    write_bundle(aq, dir.join(&aq_name))?;
    Ok(CandidateEntry {
        candidate_id: id.to_string(),
        answer_raw: answer_raw.to_string(),
        bundle_path_qa: Path::new(BUNDLE_DIR).join(qa_name),
        bundle_path_aq: Path::new(BUNDLE_DIR).join(aq_name),
    })
}

/// `count` correct/incorrect pairs, instance `i` drawn from stream `i` of `config.seed`.
/// Writes `pairs.json` plus bundles under `out_dir/bundles/`.
pub fn write_pair_set(config: &OracleConfig, count: usize, out_dir: &Path) -> Result<PathBuf, SynthError> {
    let mut pairs = Vec::with_capacity(count);
    for index in 0..count {
        let pair = synthetic_pair(config, index)?;
        let problem_id = format!("synth-{index:04}");
        pairs.push(PairEntry {
            correct: write_entry(out_dir, &format!("{problem_id}-c"), "correct", &pair.correct_qa, &pair.correct_aq)?,
            incorrect: write_entry(
                out_dir,
                &format!("{problem_id}-i"),
                "incorrect",
                &pair.incorrect_qa,
                &pair.incorrect_aq,
            )?,
            problem_id,
            len_correct: None,
            len_incorrect: None,
        });
    }
    let path = out_dir.join("pairs.json");
    write_pair_manifest(&PairManifestFile { version: MANIFEST_VERSION, pairs }, &path)?;
    Ok(path)
}

/// One candidate per raw answer. Candidates whose canonical answer equals
/// `ground_truth` get correct-solution bundles, the rest incorrect ones.
/// Candidate `i` uses oracle instance `first_index + i`.
pub fn write_candidate_set(
    config: &OracleConfig,
    problem_id: &str,
    answers: &[String],
    ground_truth: &str,
    first_index: usize,
    out_dir: &Path,
) -> Result<PathBuf, SynthError> {
    if answers.is_empty() {
        return Err(SynthError::NoAnswers);
    }
    let truth = normalize_answer(ground_truth).ok();
    let mut candidates = Vec::with_capacity(answers.len());
    for (i, raw) in answers.iter().enumerate() {
        let pair = synthetic_pair(config, first_index + i)?;
        let is_correct = truth.is_some() && normalize_answer(raw).ok() == truth;
        let (qa, aq) = if is_correct {
            (&pair.correct_qa, &pair.correct_aq)
        } else {
            (&pair.incorrect_qa, &pair.incorrect_aq)
        };
        candidates.push(write_entry(out_dir, &format!("{problem_id}-{i}"), raw, qa, aq)?);
    }
    let file = CandidateManifestFile {
        version: MANIFEST_VERSION,
        problem_id: problem_id.to_string(),
        problem_text: format!("synthetic problem {problem_id}"),
        candidates,
        ground_truth: Some(ground_truth.to_string()),
    };
    let path = out_dir.join(format!("{problem_id}.json"));
    write_manifest(&file, &path)?;
    Ok(path)
}
