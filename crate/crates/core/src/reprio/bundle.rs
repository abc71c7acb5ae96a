//! Binary representation bundles.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `SIND`                            |
//! | 4      | 4    | format version, `u32` (currently 1)     |
//! | 8      | 1    | template order code (0 = QA, 1 = AQ)    |
//! | 9      | 4    | layer, `u32`                            |
//! | 13     | 4    | N (problem rows), `u32`                 |
//! | 17     | 4    | M (solution rows), `u32`                |
//! | 21     | 4    | d (dimension), `u32`                    |
//! | 25     | 4    | model tag byte length `L`, `u32`        |
//! | 29     | L    | model tag, UTF-8                        |
//! | 29+L   | 4·N·d | problem rows, `f32`, row-major         |
//! | ...    | 4·M·d | solution rows, `f32`, row-major        |
//!
//! Candidate ids are not stored in the file; manifests assign them on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::indicator::TemplateOrder;
use crate::linalg::{LinalgError, RepMatrix};

pub const MAGIC: [u8; 4] = *b"SIND";
pub const FORMAT_VERSION: u32 = 1;
const FIXED_HEADER_LEN: usize = 29;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bad magic {found:?} at byte offset 0 (expected \"SIND\")")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {found} at byte offset 4 (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("truncated header: need {expected} bytes, file has {actual}")]
    TruncatedHeader { expected: usize, actual: usize },
    #[error("truncated payload: expected {expected} bytes in total, file has {actual}")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("{extra} trailing bytes after payload ending at byte offset {end}")]
    TrailingBytes { end: usize, extra: usize },
    #[error("non-finite float at byte offset {offset}")]
    NonFinite { offset: usize },
    #[error("invalid template order code {code} at byte offset 8")]
    BadOrderCode { code: u8 },
    #[error("model tag at byte offset {FIXED_HEADER_LEN} is not valid UTF-8")]
    BadTag,
    #[error("bundle must have N >= 1, M >= 1 and d >= 1 (got N={n}, M={m}, d={d})")]
    EmptyShape { n: u32, m: u32, d: u32 },
    #[error("problem reps have d={problem} but solution reps have d={solution}")]
    DimensionMismatch { problem: usize, solution: usize },
    #[error("value {value} at {section} row {row}, column {col} does not fit in an f32")]
    OutOfRange { section: &'static str, row: usize, col: usize, value: f64 },
    #[error("{field} = {value} does not fit in a u32")]
    FieldOverflow { field: &'static str, value: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Token representations for one (problem, solution, template order) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationBundle {
    pub candidate_id: Option<String>,
    pub template_order: TemplateOrder,
    pub representation_model: String,
    pub layer: u32,
    pub problem_reps: RepMatrix,
    pub solution_reps: RepMatrix,
}

impl RepresentationBundle {
    pub fn new(
        template_order: TemplateOrder,
        representation_model: impl Into<String>,
        layer: u32,
        problem_reps: RepMatrix,
        solution_reps: RepMatrix,
    ) -> Result<Self, BundleError> {
        if problem_reps.dim() != solution_reps.dim() {
            return Err(BundleError::DimensionMismatch {
                problem: problem_reps.dim(),
                solution: solution_reps.dim(),
            });
        }
        Ok(Self {
            candidate_id: None,
            template_order,
            representation_model: representation_model.into(),
            layer,
            problem_reps,
            solution_reps,
        })
    }

    pub fn with_candidate_id(mut self, id: impl Into<String>) -> Self {
        self.candidate_id = Some(id.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.problem_reps.dim()
    }

    /// Problem token count N.
    pub fn n(&self) -> usize {
        self.problem_reps.rows()
    }

    /// Solution token count M.
    pub fn m(&self) -> usize {
        self.solution_reps.rows()
    }
}

fn order_code(order: TemplateOrder) -> u8 {
    match order {
        TemplateOrder::QA => 0,
        TemplateOrder::AQ => 1,
    }
}

fn as_u32(field: &'static str, value: usize) -> Result<u32, BundleError> {
    u32::try_from(value).map_err(|_| BundleError::FieldOverflow { field, value })
}

fn push_rows(
    out: &mut Vec<u8>,
    reps: &RepMatrix,
    section: &'static str,
) -> Result<(), BundleError> {
    for (row, values) in reps.iter_rows().enumerate() {
        for (col, &value) in values.iter().enumerate() {
            let narrowed = value as f32;
            if !narrowed.is_finite() {
                return Err(BundleError::OutOfRange { section, row, col, value });
            }
            out.extend_from_slice(&narrowed.to_le_bytes());
        }
    }
    Ok(())
}

/// Serializes a bundle to its byte representation.
pub fn encode_bundle(bundle: &RepresentationBundle) -> Result<Vec<u8>, BundleError> {
    if bundle.problem_reps.dim() != bundle.solution_reps.dim() {
        return Err(BundleError::DimensionMismatch {
            problem: bundle.problem_reps.dim(),
            solution: bundle.solution_reps.dim(),
        });
    }
    let tag = bundle.representation_model.as_bytes();
    let n = bundle.n();
    let m = bundle.m();
    let d = bundle.dim();
    let mut out = Vec::with_capacity(FIXED_HEADER_LEN + tag.len() + 4 * (n + m) * d);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(order_code(bundle.template_order));
    out.extend_from_slice(&bundle.layer.to_le_bytes());
    out.extend_from_slice(&as_u32("N", n)?.to_le_bytes());
    out.extend_from_slice(&as_u32("M", m)?.to_le_bytes());
    out.extend_from_slice(&as_u32("d", d)?.to_le_bytes());
    out.extend_from_slice(&as_u32("model tag length", tag.len())?.to_le_bytes());
    out.extend_from_slice(tag);
    push_rows(&mut out, &bundle.problem_reps, "problem")?;
    push_rows(&mut out, &bundle.solution_reps, "solution")?;
    Ok(out)
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

fn read_rows(
    bytes: &[u8],
    start: usize,
    rows: usize,
    dim: usize,
) -> Result<RepMatrix, BundleError> {
    let mut data = Vec::with_capacity(rows * dim);
    for k in 0..rows * dim {
        let offset = start + 4 * k;
        let value = f32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"));
        if !value.is_finite() {
            return Err(BundleError::NonFinite { offset });
        }
        data.push(f64::from(value));
    }
    Ok(RepMatrix::new(rows, dim, data)?)
}

/// Parses a bundle from bytes, validating every header field and the payload length.
pub fn decode_bundle(bytes: &[u8]) -> Result<RepresentationBundle, BundleError> {
    if bytes.len() < 4 {
        return Err(BundleError::TruncatedHeader { expected: FIXED_HEADER_LEN, actual: bytes.len() });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(BundleError::BadMagic { found: magic });
    }
    if bytes.len() < 8 {
        return Err(BundleError::TruncatedHeader { expected: FIXED_HEADER_LEN, actual: bytes.len() });
    }
    let version = read_u32(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(BundleError::VersionMismatch { found: version });
    }
    if bytes.len() < FIXED_HEADER_LEN {
        return Err(BundleError::TruncatedHeader { expected: FIXED_HEADER_LEN, actual: bytes.len() });
    }
    let template_order = match bytes[8] {
        0 => TemplateOrder::QA,
        1 => TemplateOrder::AQ,
        code => return Err(BundleError::BadOrderCode { code }),
    };
    let layer = read_u32(bytes, 9);
    let n = read_u32(bytes, 13);
    let m = read_u32(bytes, 17);
    let d = read_u32(bytes, 21);
    let tag_len = read_u32(bytes, 25) as usize;
    if n == 0 || m == 0 || d == 0 {
        return Err(BundleError::EmptyShape { n, m, d });
    }
    let header_len = FIXED_HEADER_LEN + tag_len;
    if bytes.len() < header_len {
        return Err(BundleError::TruncatedHeader { expected: header_len, actual: bytes.len() });
    }
    let tag = std::str::from_utf8(&bytes[FIXED_HEADER_LEN..header_len])
        .map_err(|_| BundleError::BadTag)?
        .to_string();
    let (n, m, d) = (n as usize, m as usize, d as usize);
    let payload = (n + m)
        .checked_mul(d)
        .and_then(|x| x.checked_mul(4))
        .unwrap_or(usize::MAX);
    let expected = header_len.saturating_add(payload);
    if bytes.len() < expected {
        return Err(BundleError::TruncatedPayload { expected, actual: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(BundleError::TrailingBytes { end: expected, extra: bytes.len() - expected });
    }
    let problem_reps = read_rows(bytes, header_len, n, d)?;
    let solution_reps = read_rows(bytes, header_len + 4 * n * d, m, d)?;
    Ok(RepresentationBundle {
        candidate_id: None,
        template_order,
        representation_model: tag,
        layer,
        problem_reps,
        solution_reps,
    })
}

pub fn write_bundle(bundle: &RepresentationBundle, path: impl AsRef<Path>) -> Result<(), BundleError> {
    let path = path.as_ref();
    let bytes = encode_bundle(bundle)?;
    let io_err = |source| BundleError::Io { path: path.display().to_string(), source };
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(&bytes).map_err(io_err)?;
    Ok(())
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<RepresentationBundle, BundleError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| BundleError::Io { path: path.display().to_string(), source })?;
    decode_bundle(&bytes)
}
