//! Dense correlation matrices, singular values and thresholded numerical rank.
//!
//! A correlation matrix pairs `M` solution-token representations (rows) with
//! `N` problem-token representations (columns): `R[i][j] = <h_i, n_j>`.
//! Its thresholded rank, divided by `M`, is the per-template quantity that
//! the indicator score is built from.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Singular values at or below this fraction of the largest one are zero.
pub const ZERO_CUTOFF: f64 = 1e-10;

const SVD_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("representation matrix must have at least one row and one column (got {rows}x{dim})")]
    Empty { rows: usize, dim: usize },
    #[error("data length {len} does not match {rows} rows x {dim} columns")]
    Shape { rows: usize, dim: usize, len: usize },
    #[error("non-finite value in row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: solution reps have d={solution}, problem reps have d={problem}")]
    DimensionMismatch { solution: usize, problem: usize },
    #[error("threshold delta must be non-negative and finite (got {0})")]
    InvalidDelta(f64),
    #[error("spectral reference sigma_max must be positive and finite (got {0})")]
    InvalidReference(f64),
    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdNonConvergence { rows: usize, cols: usize },
    #[error("unknown normalization mode `{0}` (expected raw, unit-rows or spectral)")]
    UnknownMode(String),
}

/// How singular values are brought onto the scale that `delta` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// Raw inner products, raw singular values.
    #[default]
    Raw,
    /// Every representation row scaled to unit Euclidean norm before the product.
    UnitRows,
    /// Raw inner products; singular values divided by the largest before thresholding.
    Spectral,
}

impl NormalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMode::Raw => "raw",
            NormalizationMode::UnitRows => "unit-rows",
            NormalizationMode::Spectral => "spectral",
        }
    }
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationMode {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(NormalizationMode::Raw),
            "unit-rows" => Ok(NormalizationMode::UnitRows),
            "spectral" => Ok(NormalizationMode::Spectral),
            other => Err(LinalgError::UnknownMode(other.to_string())),
        }
    }
}

/// Row-major matrix of token representations, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl RepMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || dim == 0 {
            return Err(LinalgError::Empty { rows, dim });
        }
        if data.len() != rows * dim {
            return Err(LinalgError::Shape { rows, dim, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite { row: pos / dim, col: pos % dim });
        }
        Ok(Self { rows, dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(LinalgError::Shape { rows: rows.len(), dim, len: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn zeros(rows: usize, dim: usize) -> Result<Self, LinalgError> {
        Self::new(rows, dim, vec![0.0; rows * dim])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Copy of the first `count` rows.
    pub fn head(&self, count: usize) -> Result<Self, LinalgError> {
        let count = count.min(self.rows);
        Self::new(count, self.dim, self.data[..count * self.dim].to_vec())
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &RepMatrix) -> Result<Self, LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch { solution: self.dim, problem: other.dim });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(self.rows + other.rows, self.dim, data)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, LinalgError> {
        Self::new(self.rows, self.dim, self.data.iter().map(|x| x * factor).collect())
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.dim, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter().copied());
        }
        Self::new(m.nrows(), m.ncols(), data)
    }

    fn unit_rows(&self) -> DMatrix<f64> {
        let mut out = self.to_dmatrix();
        for mut row in out.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        out
    }
}

/// The `M x N` solution-by-problem inner-product matrix.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    mode: NormalizationMode,
    spectrum: OnceLock<Vec<f64>>,
}

impl CorrelationMatrix {
    /// Wraps an already-formed matrix. Entries must be finite.
    pub fn from_entries(
        entries: DMatrix<f64>,
        mode: NormalizationMode,
    ) -> Result<Self, LinalgError> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(LinalgError::Empty { rows: entries.nrows(), dim: entries.ncols() });
        }
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            // nalgebra storage is column-major
            let rows = entries.nrows();
            return Err(LinalgError::NonFinite { row: pos % rows, col: pos / rows });
        }
        Ok(Self { entries, mode, spectrum: OnceLock::new() })
    }

    /// Solution token count.
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    /// Problem token count.
    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Singular values, non-increasing. Computed once and cached.
    pub fn spectrum(&self) -> Result<&[f64], LinalgError> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = singular_values_of(&self.entries)?;
        Ok(self.spectrum.get_or_init(|| s))
    }
}

/// Builds `R[i][j] = <h_i, n_j>` from solution rows `h` and problem rows `n`.
pub fn correlation_matrix(
    solution_reps: &RepMatrix,
    problem_reps: &RepMatrix,
    mode: NormalizationMode,
) -> Result<CorrelationMatrix, LinalgError> {
    if solution_reps.dim() != problem_reps.dim() {
        return Err(LinalgError::DimensionMismatch {
            solution: solution_reps.dim(),
            problem: problem_reps.dim(),
        });
    }
    let (h, n) = match mode {
        NormalizationMode::UnitRows => (solution_reps.unit_rows(), problem_reps.unit_rows()),
        NormalizationMode::Raw | NormalizationMode::Spectral => {
            (solution_reps.to_dmatrix(), problem_reps.to_dmatrix())
        }
    };
    CorrelationMatrix::from_entries(&h * n.transpose(), mode)
}

/// Singular values of the correlation matrix, non-increasing and non-negative.
pub fn singular_values(matrix: &CorrelationMatrix) -> Result<Vec<f64>, LinalgError> {
    matrix.spectrum().map(<[f64]>::to_vec)
}

/// Singular values of any dense matrix, sorted non-increasing.
pub fn singular_values_of(matrix: &DMatrix<f64>) -> Result<Vec<f64>, LinalgError> {
    let (rows, cols) = matrix.shape();
    if let Some(pos) = matrix.iter().position(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite { row: pos % rows.max(1), col: pos / rows.max(1) });
    }
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    let svd = nalgebra::linalg::SVD::try_new(matrix.clone(), false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(LinalgError::SvdNonConvergence { rows, cols })?;
    let mut values: Vec<f64> = svd.singular_values.iter().map(|s| s.abs()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Counts singular values above `delta`, after zeroing everything at or below
/// `ZERO_CUTOFF * sigma_max`. Under spectral mode values are first divided by
/// `sigma_max_ref`.
pub fn thresholded_rank(
    spectrum: &[f64],
    delta: f64,
    mode: NormalizationMode,
    sigma_max_ref: f64,
) -> Result<usize, LinalgError> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(LinalgError::InvalidDelta(delta));
    }
    let sigma_max = spectrum.iter().copied().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return Ok(0);
    }
    let floor = ZERO_CUTOFF * sigma_max;
    let kept = spectrum.iter().copied().filter(|&s| s > floor);
    let count = match mode {
        NormalizationMode::Raw | NormalizationMode::UnitRows => kept.filter(|&s| s > delta).count(),
        NormalizationMode::Spectral => {
            if !sigma_max_ref.is_finite() || sigma_max_ref <= 0.0 {
                return Err(LinalgError::InvalidReference(sigma_max_ref));
            }
            kept.filter(|&s| s / sigma_max_ref > delta).count()
        }
    };
    Ok(count)
}

/// Rank under the shared zero cutoff, with no further threshold.
pub fn numerical_rank(spectrum: &[f64]) -> usize {
    let sigma_max = spectrum.iter().copied().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return 0;
    }
    spectrum.iter().filter(|&&s| s > ZERO_CUTOFF * sigma_max).count()
}

/// Ratio between the smallest kept and the largest dropped singular value
/// for a given rank; `None` when nothing was dropped or nothing kept.
pub fn spectral_gap(spectrum: &[f64], rank: usize) -> Option<f64> {
    if rank == 0 || rank >= spectrum.len() {
        return None;
    }
    let kept = spectrum[rank - 1];
    let dropped = spectrum[rank];
    if dropped == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(kept / dropped)
    }
}

/// A thresholded rank together with its per-token normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEstimate {
    pub raw_rank: usize,
    pub normalized_rank: f64,
    pub delta: f64,
    pub normalization_mode: NormalizationMode,
}

/// Thresholded rank divided by the solution token count `M`.
pub fn normalized_rank(
    matrix: &CorrelationMatrix,
    delta: f64,
) -> Result<RankEstimate, LinalgError> {
    let spectrum = matrix.spectrum()?;
    let sigma_max = spectrum.first().copied().unwrap_or(0.0);
    let reference = if sigma_max > 0.0 { sigma_max } else { 1.0 };
    let raw_rank = thresholded_rank(spectrum, delta, matrix.mode(), reference)?;
    Ok(RankEstimate {
        raw_rank,
        normalized_rank: raw_rank as f64 / matrix.m() as f64,
        delta,
        normalization_mode: matrix.mode(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(d: usize) -> RepMatrix {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        RepMatrix::new(d, d, data).unwrap()
    }

    #[test]
    fn zero_solution_gives_zero_matrix() {
        let h = RepMatrix::zeros(3, 4).unwrap();
        let n = RepMatrix::from_rows(&[[1.0, -2.0, 0.5, 3.0], [0.0, 1.0, 1.0, 1.0]]).unwrap();
        let r = correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap();
        assert_eq!((r.m(), r.n()), (3, 2));
        assert!(r.entries().iter().all(|&x| x == 0.0));
        assert_eq!(normalized_rank(&r, 0.0).unwrap().raw_rank, 0);
    }

    #[test]
    fn orthonormal_basis_gives_identity() {
        let e = basis(3);
        let r = correlation_matrix(&e, &e, NormalizationMode::Raw).unwrap();
        assert_eq!(r.entries(), &DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn dimension_mismatch_reports_both_dims() {
        let h = RepMatrix::zeros(2, 3).unwrap();
        let n = RepMatrix::zeros(2, 4).unwrap();
        let err = correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap_err();
        assert_eq!(err, LinalgError::DimensionMismatch { solution: 3, problem: 4 });
    }

    #[test]
    fn non_finite_input_names_row() {
        let err = RepMatrix::new(2, 2, vec![1.0, 2.0, f64::NAN, 0.0]).unwrap_err();
        assert_eq!(err, LinalgError::NonFinite { row: 1, col: 0 });
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(RepMatrix::new(0, 3, vec![]), Err(LinalgError::Empty { .. })));
        assert!(matches!(RepMatrix::new(2, 0, vec![]), Err(LinalgError::Empty { .. })));
    }

    #[test]
    fn unit_rows_normalizes_before_product() {
        let h = RepMatrix::from_rows(&[[3.0, 4.0]]).unwrap();
        let n = RepMatrix::from_rows(&[[0.0, 10.0]]).unwrap();
        let r = correlation_matrix(&h, &n, NormalizationMode::UnitRows).unwrap();
        assert!((r.get(0, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn diagonal_spectrum() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let s = singular_values_of(&m).unwrap();
        for (got, want) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn outer_product_spectrum() {
        // |u| = 2, |v| = 3
        let u = nalgebra::DVector::from_vec(vec![2.0, 0.0, 0.0]);
        let v = nalgebra::DVector::from_vec(vec![0.0, 3.0, 0.0, 0.0]);
        let m = &u * v.transpose();
        let s = singular_values_of(&m).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s[0] - 6.0).abs() < 1e-12);
        assert!(s[1..].iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn threshold_counts() {
        let s = [3.0, 2.0, 1.0];
        assert_eq!(thresholded_rank(&s, 1.5, NormalizationMode::Raw, 3.0).unwrap(), 2);
        assert_eq!(thresholded_rank(&s, 0.0, NormalizationMode::Raw, 3.0).unwrap(), 3);
        assert_eq!(thresholded_rank(&s, 0.5, NormalizationMode::Spectral, 3.0).unwrap(), 2);
        assert_eq!(thresholded_rank(&[0.0, 0.0], 0.0, NormalizationMode::Raw, 1.0).unwrap(), 0);
        assert_eq!(
            thresholded_rank(&s, -0.1, NormalizationMode::Raw, 3.0).unwrap_err(),
            LinalgError::InvalidDelta(-0.1)
        );
    }

    #[test]
    fn tiny_singular_values_are_zeroed() {
        let s = [1.0, 1e-11, 0.0];
        assert_eq!(thresholded_rank(&s, 0.0, NormalizationMode::Raw, 1.0).unwrap(), 1);
        assert_eq!(numerical_rank(&s), 1);
    }

    #[test]
    fn normalized_rank_divides_by_solution_tokens() {
        // 4x6 with singular values 4, 3, 2, 0
        let mut e = DMatrix::zeros(4, 6);
        e[(0, 0)] = 4.0;
        e[(1, 1)] = 3.0;
        e[(2, 2)] = 2.0;
        let r = CorrelationMatrix::from_entries(e, NormalizationMode::Raw).unwrap();
        let est = normalized_rank(&r, 1.0).unwrap();
        assert_eq!(est.raw_rank, 3);
        assert_eq!(est.normalized_rank, 0.75);
    }

    #[test]
    fn row_duplication_halves_normalized_rank() {
        let h = RepMatrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]]).unwrap();
        let n = RepMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let once = normalized_rank(&correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap(), 0.0).unwrap();
        let twice_h = h.vstack(&h).unwrap();
        let twice = normalized_rank(&correlation_matrix(&twice_h, &n, NormalizationMode::Raw).unwrap(), 0.0).unwrap();
        assert_eq!(once.raw_rank, twice.raw_rank);
        assert_eq!(twice.normalized_rank * 2.0, once.normalized_rank);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("unit-rows".parse::<NormalizationMode>().unwrap(), NormalizationMode::UnitRows);
        assert!("softmax".parse::<NormalizationMode>().is_err());
    }

    #[test]
    fn spectral_gap_reports_ratio() {
        assert_eq!(spectral_gap(&[4.0, 2.0, 0.5], 2), Some(4.0));
        assert_eq!(spectral_gap(&[4.0, 2.0], 2), None);
        assert_eq!(spectral_gap(&[4.0, 0.0], 1), Some(f64::INFINITY));
    }
}
