//! Persistence: representation bundles, manifests, answer canonicalization, reports.

mod answer;
mod bundle;
mod manifest;
mod report;

pub use answer::{normalize_answer, AnswerError};
pub use bundle::{
    decode_bundle, encode_bundle, read_bundle, write_bundle, BundleError, RepresentationBundle, FORMAT_VERSION, MAGIC,
};
pub use manifest::{
    load_manifest, load_pair_manifest, write_manifest, write_pair_manifest, CandidateEntry, CandidateManifest,
    CandidateManifestFile, ManifestCandidate, ManifestError, ManifestPair, PairEntry, PairManifest, PairManifestFile,
    MANIFEST_VERSION,
};
pub use report::{
    read_scores, render_scores, to_json_text, write_scores, ConfigEcho, ExcludedCandidate, ReportError, ScoreReport,
    SCORE_REPORT_FORMAT,
};
