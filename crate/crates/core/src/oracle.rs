//! Synthetic single-layer linear-attention model.
//!
//! Problem tokens are Gaussian, `W = A Bᵀ` is low rank, and a "correct"
//! solution is generated token by token: every new representation is a
//! scaled linear-attention readout over the problem tokens and the
//! solution tokens produced so far. An "incorrect" solution shares a correct
//! prefix of length `eta` and then continues with Gaussian noise tokens.
//!
//! The predictions under test, all with integer ranks under the shared
//! `1e-10 · σ_max` cutoff:
//!
//! * `rank(R_correct) = v` where `v = rank(W_*)`, `W_* = Σ_r (W n_r) n_rᵀ`;
//! * `rank(R_incorrect) = v + min(N, noise_len)` (capped by `N` columns);
//! * `dim span{n_Nᵀ W_*, …, n_Nᵀ W_*^M} = v` once `M ≥ v`.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicator::TemplateOrder;
use crate::linalg::{
    correlation_matrix, numerical_rank, singular_values_of, spectral_gap, LinalgError, NormalizationMode,
    RepMatrix, ZERO_CUTOFF,
};
use crate::reprio::{BundleError, RepresentationBundle};

/// Attention denominators below this fraction of the summed absolute scores are degenerate.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;
/// Model tag written into bundles produced from the synthetic model.
pub const ORACLE_MODEL_TAG: &str = "oracle/linear-attention";

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid oracle configuration: {0}")]
    Config(String),
    #[error("rank {r} exceeds dimension {d}")]
    RankTooLarge { r: usize, d: usize },
    #[error("attention denominator {denominator:e} is degenerate (score scale {scale:e})")]
    DegenerateAttention { denominator: f64, scale: f64 },
    #[error("attention needs at least one context vector")]
    NoContext,
    #[error("vector of length {found} where {expected} was expected")]
    Dimension { expected: usize, found: usize },
    #[error("eta = {eta} must lie in 1..={rows}")]
    Prefix { eta: usize, rows: usize },
    #[error("resampling budget exhausted: {resamples} resamples over {trials} trials (limit {limit})")]
    ExcessiveResampling { resamples: usize, trials: usize, limit: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Problem token count N.
    pub n: usize,
    /// Representation dimension d.
    pub d: usize,
    /// Rank of W.
    pub r: usize,
    /// Correct solution length M.
    pub m: usize,
    /// Length of the correct prefix shared by the incorrect solution.
    pub eta: usize,
    /// Noise tokens appended after the prefix (M' - eta).
    pub noise_len: usize,
    /// Range the per-token scalars c_i are drawn from, uniformly.
    pub scalar_range: (f64, f64),
    pub trials: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { n: 16, d: 64, r: 6, m: 30, eta: 10, noise_len: 8, scalar_range: (0.5, 2.0), trials: 200, seed: 0 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        let fail = |msg: String| Err(OracleError::Config(msg));
        if self.n == 0 || self.d == 0 || self.m == 0 {
            return fail(format!("n, d and m must be positive (n={}, d={}, m={})", self.n, self.d, self.m));
        }
        let bound = self.m.min(self.n).min(self.d);
        if self.r == 0 || self.r >= bound {
            return fail(format!("need 1 <= r < min(m, n, d) = {bound}, got r = {}", self.r));
        }
        if self.eta == 0 || self.eta > self.m {
            return fail(format!("need 1 <= eta <= m = {}, got eta = {}", self.m, self.eta));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        let (lo, hi) = self.scalar_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return fail(format!("scalar range must satisfy 0 < lo <= hi < inf, got [{lo}, {hi}]"));
        }
        if self.n > self.d {
            warn!("n = {} > d = {}: problem tokens cannot be linearly independent", self.n, self.d);
        }
        Ok(())
    }

    /// Rank the incorrect solution is predicted to reach: `v + min(N, noise_len)`,
    /// capped by the matrix shape `min(N, eta + noise_len)`.
    pub fn predicted_incorrect(&self, v: usize) -> usize {
        (v + self.n.min(self.noise_len)).min(self.n).min(self.eta + self.noise_len)
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // row-major fill so the stream order matches RepMatrix layout
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// `n` i.i.d. standard Gaussian rows in `d` dimensions.
pub fn sample_problem_tokens(n: usize, d: usize, seed: u64) -> Result<RepMatrix, OracleError> {
    if n > d {
        warn!("sampling {n} problem tokens in {d} dimensions: linear independence is not guaranteed");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    Ok(RepMatrix::new(n, d, data)?)
}

/// `W = A Bᵀ` with Gaussian `A, B ∈ R^{d×r}`.
pub fn make_low_rank_w(d: usize, r: usize, seed: u64) -> Result<DMatrix<f64>, OracleError> {
    if r > d {
        return Err(OracleError::RankTooLarge { r, d });
    }
    if r == 0 {
        return Err(OracleError::Config("rank of W must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(d, r, &mut rng);
    let b = gaussian_matrix(d, r, &mut rng);
    Ok(a * b.transpose())
}

/// `W_* = Σ_r (W n_r) n_rᵀ = W · Nᵀ N` for problem rows `N`.
pub fn w_star(w: &DMatrix<f64>, problem_reps: &RepMatrix) -> Result<DMatrix<f64>, OracleError> {
    let d = problem_reps.dim();
    if w.nrows() != d || w.ncols() != d {
        return Err(OracleError::Dimension { expected: d, found: w.nrows() });
    }
    let n = problem_reps.to_dmatrix();
    Ok(w * (n.transpose() * n))
}

/// Linear attention readout `Σ_j (qᵀ W k_j / Σ_j' qᵀ W k_j') k_j`.
pub fn attention_step(query: &[f64], contexts: &[&[f64]], w: &DMatrix<f64>) -> Result<Vec<f64>, OracleError> {
    let d = w.nrows();
    if query.len() != d {
        return Err(OracleError::Dimension { expected: d, found: query.len() });
    }
    if contexts.is_empty() {
        return Err(OracleError::NoContext);
    }
    // qᵀ W k = (Wᵀ q) · k
    let projected = w.tr_mul(&DVector::from_column_slice(query));
    let mut scores = Vec::with_capacity(contexts.len());
    for k in contexts {
        if k.len() != d {
            return Err(OracleError::Dimension { expected: d, found: k.len() });
        }
        scores.push(projected.iter().zip(k.iter()).map(|(a, b)| a * b).sum::<f64>());
    }
    let denominator: f64 = scores.iter().sum();
    let scale: f64 = scores.iter().map(|s| s.abs()).sum();
    if !denominator.is_finite() || denominator.abs() <= DEGENERATE_DENOMINATOR * scale {
        return Err(OracleError::DegenerateAttention { denominator, scale });
    }
    let mut out = vec![0.0; d];
    for (k, s) in contexts.iter().zip(&scores) {
        let weight = s / denominator;
        for (o, x) in out.iter_mut().zip(k.iter()) {
            *o += weight * x;
        }
    }
    Ok(out)
}

/// Generates `m` correct solution representations by the attention recursion.
///
/// `h_1 = c_1 · attn(n_N; n_1..n_N)` and
/// `h_{i+1} = c_{i+1} · attn(h_i; n_1..n_N, h_1..h_i)`.
pub fn generate_correct_solution(
    problem_reps: &RepMatrix,
    w: &DMatrix<f64>,
    m: usize,
    scalar_range: (f64, f64),
    seed: u64,
) -> Result<RepMatrix, OracleError> {
    if m == 0 {
        return Err(OracleError::Config("solution length m must be at least 1".into()));
    }
    let (lo, hi) = scalar_range;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(OracleError::Config(format!("bad scalar range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || if lo == hi { lo } else { rng.random_range(lo..=hi) };

    let mut context: Vec<Vec<f64>> = problem_reps.iter_rows().map(<[f64]>::to_vec).collect();
    let n = context.len();
    let mut query = context[n - 1].clone();
    for _ in 0..m {
        let refs: Vec<&[f64]> = context.iter().map(Vec::as_slice).collect();
        let c = draw();
        let h: Vec<f64> = attention_step(&query, &refs, w)?.into_iter().map(|x| c * x).collect();
        context.push(h.clone());
        query = h;
    }
    let d = problem_reps.dim();
    let data = context[n..].concat();
    RepMatrix::new(m, d, data).map_err(|e| match e {
        LinalgError::NonFinite { .. } => OracleError::DegenerateAttention { denominator: f64::NAN, scale: f64::INFINITY },
        other => other.into(),
    })
}

/// First `eta` correct rows followed by `noise_len` Gaussian rows.
pub fn generate_incorrect_solution(
    correct_reps: &RepMatrix,
    eta: usize,
    noise_len: usize,
    d: usize,
    seed: u64,
) -> Result<RepMatrix, OracleError> {
    if eta == 0 || eta > correct_reps.rows() {
        return Err(OracleError::Prefix { eta, rows: correct_reps.rows() });
    }
    if d != correct_reps.dim() {
        return Err(OracleError::Dimension { expected: correct_reps.dim(), found: d });
    }
    let prefix = correct_reps.head(eta)?;
    if noise_len == 0 {
        warn!("noise_len = 0: the incorrect solution is just the correct prefix");
        return Ok(prefix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..noise_len * d).map(|_| rng.sample(StandardNormal)).collect();
    Ok(prefix.vstack(&RepMatrix::new(noise_len, d, noise)?)?)
}

/// Orthonormal basis of `span{x, x·A, x·A², …}` (at most `steps` vectors),
/// built by Arnoldi iteration with two passes of modified Gram-Schmidt.
/// Stops early when the next vector falls inside the current span, judged
/// against the shared relative zero cutoff.
pub fn krylov_basis(start: &DVector<f64>, op: &DMatrix<f64>, steps: usize) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let norm = start.norm();
    if steps == 0 || norm == 0.0 || !norm.is_finite() {
        return basis;
    }
    basis.push(start / norm);
    let op_t = op.transpose();
    while basis.len() < steps {
        let mut next = &op_t * basis.last().expect("non-empty basis");
        let before = next.norm();
        if before == 0.0 {
            break;
        }
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&next);
                next.axpy(-proj, q, 1.0);
            }
        }
        let after = next.norm();
        if after <= ZERO_CUTOFF * before {
            break;
        }
        basis.push(next / after);
    }
    basis
}

fn stack_rows(vectors: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(vectors.len(), d, |i, j| vectors[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KrylovCheck {
    /// Dimension of `span{n_Nᵀ W_*, …, n_Nᵀ W_*^m}` from an Arnoldi basis.
    pub dim_a: usize,
    /// Numerical rank of the directly stacked (row-normalized) powers; loses
    /// directions once the power sequence outruns f64 resolution.
    pub dim_a_stacked: usize,
    /// `rank(W_*)`.
    pub v: usize,
}

/// Dimension of the Krylov space generated by the last problem token under `W_*`.
pub fn krylov_rank_check(problem_reps: &RepMatrix, w: &DMatrix<f64>, m: usize) -> Result<KrylovCheck, OracleError> {
    let ws = w_star(w, problem_reps)?;
    let v = numerical_rank(&singular_values_of(&ws)?);
    let last = DVector::from_column_slice(problem_reps.row(problem_reps.rows() - 1));
    // first Krylov row is n_Nᵀ W_*
    let start = ws.tr_mul(&last);
    let basis = krylov_basis(&start, &ws, m);
    let dim_a = if basis.is_empty() {
        0
    } else {
        numerical_rank(&singular_values_of(&stack_rows(&basis, ws.nrows()))?)
    };
    let mut powers = Vec::with_capacity(m);
    let mut row = start;
    for _ in 0..m {
        let norm = row.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        row /= norm;
        powers.push(row.clone());
        row = ws.tr_mul(&row);
    }
    let dim_a_stacked = if powers.is_empty() {
        0
    } else {
        numerical_rank(&singular_values_of(&stack_rows(&powers, ws.nrows()))?)
    };
    Ok(KrylovCheck { dim_a, dim_a_stacked, v })
}

/// Rank of the matrix with rows `h_1ᵀ W_*^l Nᵀ`, `l = 0..m-1`, which the
/// recursion makes equal to `rank(R_correct)`.
pub fn lemma_rank(
    first_solution_rep: &[f64],
    w_star: &DMatrix<f64>,
    problem_reps: &RepMatrix,
    m: usize,
) -> Result<usize, OracleError> {
    let d = problem_reps.dim();
    if first_solution_rep.len() != d {
        return Err(OracleError::Dimension { expected: d, found: first_solution_rep.len() });
    }
    let basis = krylov_basis(&DVector::from_column_slice(first_solution_rep), w_star, m);
    if basis.is_empty() {
        return Ok(0);
    }
    let product = stack_rows(&basis, d) * problem_reps.to_dmatrix().transpose();
    Ok(numerical_rank(&singular_values_of(&product)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub rank_r_correct: usize,
    /// `rank(W_*)`.
    pub v: usize,
    pub rank_r_incorrect: usize,
    pub predicted_incorrect: usize,
    pub krylov_dim: usize,
    pub krylov_dim_stacked: usize,
    pub lemma_rank: usize,
    /// `σ_v / σ_1` of `R_correct`; below the zero cutoff the v-th direction is lost.
    pub sigma_v_ratio_correct: f64,
    /// Smallest kept over largest dropped singular value of `R_correct`.
    pub gap_correct: Option<f64>,
    pub gap_incorrect: Option<f64>,
    pub resamples: usize,
}

impl TrialRecord {
    pub fn correct_matches(&self) -> bool {
        self.rank_r_correct == self.v
    }

    pub fn incorrect_matches(&self) -> bool {
        self.rank_r_incorrect == self.predicted_incorrect
    }

    pub fn rank_gap(&self) -> i64 {
        self.rank_r_incorrect as i64 - self.rank_r_correct as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAggregates {
    pub frac_correct_match: f64,
    pub frac_incorrect_match: f64,
    /// Trials where the incorrect rank strictly exceeds the correct rank.
    pub frac_incorrect_above: f64,
    pub frac_krylov_match: f64,
    pub frac_krylov_stacked_match: f64,
    /// Trials where the lemma-form rank equals `v`.
    pub frac_lemma_match: f64,
    pub mean_rank_gap: f64,
    pub total_resamples: usize,
    pub correct_rank_counts: BTreeMap<usize, usize>,
    pub incorrect_rank_counts: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub format: String,
    pub config: OracleConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: OracleAggregates,
}

pub const ORACLE_REPORT_FORMAT: &str = "self-indicator/oracle-report/v1";

/// One synthetic problem: tokens, W, a correct and an incorrect solution.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub problem: RepMatrix,
    pub w: DMatrix<f64>,
    pub correct: RepMatrix,
    pub incorrect: RepMatrix,
    pub resamples: usize,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Draws one instance from the `(seed, index)` stream, resampling degenerate
/// attention draws up to `max_resamples` times.
pub fn sample_instance(config: &OracleConfig, index: usize, max_resamples: usize) -> Result<OracleInstance, OracleError> {
    let mut rng = trial_rng(config.seed, index);
    let mut resamples = 0;
    loop {
        let problem = sample_problem_tokens(config.n, config.d, rng.next_u64())?;
        let w = make_low_rank_w(config.d, config.r, rng.next_u64())?;
        let scalar_seed = rng.next_u64();
        let noise_seed = rng.next_u64();
        match generate_correct_solution(&problem, &w, config.m, config.scalar_range, scalar_seed) {
            Ok(correct) => {
                let incorrect = generate_incorrect_solution(&correct, config.eta, config.noise_len, config.d, noise_seed)?;
                return Ok(OracleInstance { problem, w, correct, incorrect, resamples });
            }
            Err(OracleError::DegenerateAttention { denominator, scale }) => {
                resamples += 1;
                if resamples > max_resamples {
                    return Err(OracleError::ExcessiveResampling {
                        resamples,
                        trials: config.trials,
                        limit: max_resamples,
                    });
                }
                log::debug!("trial {index}: degenerate attention ({denominator:e} vs {scale:e}), resampling");
            }
            Err(other) => return Err(other),
        }
    }
}

fn resample_limit(config: &OracleConfig) -> usize {
    10 * config.trials
}

fn run_trial(config: &OracleConfig, trial: usize) -> Result<TrialRecord, OracleError> {
    let inst = sample_instance(config, trial, resample_limit(config))?;
    let ws = w_star(&inst.w, &inst.problem)?;
    let v = numerical_rank(&singular_values_of(&ws)?);

    let spectrum_correct = singular_values_of(
        correlation_matrix(&inst.correct, &inst.problem, NormalizationMode::Raw)?.entries(),
    )?;
    let spectrum_incorrect = singular_values_of(
        correlation_matrix(&inst.incorrect, &inst.problem, NormalizationMode::Raw)?.entries(),
    )?;
    let rank_r_correct = numerical_rank(&spectrum_correct);
    let rank_r_incorrect = numerical_rank(&spectrum_incorrect);
    let krylov = krylov_rank_check(&inst.problem, &inst.w, config.m)?;
    let lemma = lemma_rank(inst.correct.row(0), &ws, &inst.problem, config.m)?;

    Ok(TrialRecord {
        trial,
        rank_r_correct,
        v,
        rank_r_incorrect,
        predicted_incorrect: config.predicted_incorrect(v),
        krylov_dim: krylov.dim_a,
        krylov_dim_stacked: krylov.dim_a_stacked,
        lemma_rank: lemma,
        sigma_v_ratio_correct: match (v.checked_sub(1).and_then(|i| spectrum_correct.get(i)), spectrum_correct.first()) {
            (Some(&sv), Some(&s1)) if s1 > 0.0 => sv / s1,
            _ => 0.0,
        },
        gap_correct: spectral_gap(&spectrum_correct, rank_r_correct),
        gap_incorrect: spectral_gap(&spectrum_incorrect, rank_r_incorrect),
        resamples: inst.resamples,
    })
}

fn fraction(records: &[TrialRecord], pred: impl Fn(&TrialRecord) -> bool) -> f64 {
    records.iter().filter(|r| pred(r)).count() as f64 / records.len() as f64
}

pub fn aggregate(records: &[TrialRecord]) -> OracleAggregates {
    let mut correct_rank_counts = BTreeMap::new();
    let mut incorrect_rank_counts = BTreeMap::new();
    for r in records {
        *correct_rank_counts.entry(r.rank_r_correct).or_insert(0) += 1;
        *incorrect_rank_counts.entry(r.rank_r_incorrect).or_insert(0) += 1;
    }
    OracleAggregates {
        frac_correct_match: fraction(records, TrialRecord::correct_matches),
        frac_incorrect_match: fraction(records, TrialRecord::incorrect_matches),
        frac_incorrect_above: fraction(records, |r| r.rank_r_incorrect > r.rank_r_correct),
        frac_krylov_match: fraction(records, |r| r.krylov_dim == r.v),
        frac_krylov_stacked_match: fraction(records, |r| r.krylov_dim_stacked == r.v),
        frac_lemma_match: fraction(records, |r| r.lemma_rank == r.v),
        mean_rank_gap: records.iter().map(|r| r.rank_gap() as f64).sum::<f64>() / records.len() as f64,
        total_resamples: records.iter().map(|r| r.resamples).sum(),
        correct_rank_counts,
        incorrect_rank_counts,
    }
}

/// Runs `config.trials` independent seeded trials. Each trial draws from its
/// own `(seed, trial)` stream, so the report does not depend on scheduling.
pub fn run_trials(config: &OracleConfig) -> Result<OracleReport, OracleError> {
    config.validate()?;
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<_, _>>()?;
    let aggregates = aggregate(&records);
    let limit = resample_limit(config);
    if aggregates.total_resamples > limit {
        return Err(OracleError::ExcessiveResampling {
            resamples: aggregates.total_resamples,
            trials: config.trials,
            limit,
        });
    }
    Ok(OracleReport { format: ORACLE_REPORT_FORMAT.to_string(), config: config.clone(), trials: records, aggregates })
}

/// QA and AQ bundles for a correct and an incorrect solution of one synthetic problem.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub correct_qa: RepresentationBundle,
    pub correct_aq: RepresentationBundle,
    pub incorrect_qa: RepresentationBundle,
    pub incorrect_aq: RepresentationBundle,
}

/// Builds a bundle pair for instance `index`. The AQ view reruns the
/// recursion with fresh scalars and fresh noise over the same problem and `W`.
pub fn synthetic_pair(config: &OracleConfig, index: usize) -> Result<SyntheticPair, OracleError> {
    config.validate()?;
    let inst = sample_instance(config, index, resample_limit(config))?;
    let mut rng = trial_rng(config.seed ^ 0xA0A0_5151_C3C3_7E7E, index);
    let (correct_aq, incorrect_aq) = loop {
        let scalar_seed = rng.next_u64();
        let noise_seed = rng.next_u64();
        match generate_correct_solution(&inst.problem, &inst.w, config.m, config.scalar_range, scalar_seed) {
            Ok(c) => {
                let i = generate_incorrect_solution(&c, config.eta, config.noise_len, config.d, noise_seed)?;
                break (c, i);
            }
            Err(OracleError::DegenerateAttention { .. }) => continue,
            Err(e) => return Err(e),
        }
    };
    let bundle = |order, reps: RepMatrix| {
        RepresentationBundle::new(order, ORACLE_MODEL_TAG, 1, inst.problem.clone(), reps)
    };
    Ok(SyntheticPair {
        correct_qa: bundle(TemplateOrder::QA, inst.correct.clone())?,
        correct_aq: bundle(TemplateOrder::AQ, correct_aq)?,
        incorrect_qa: bundle(TemplateOrder::QA, inst.incorrect.clone())?,
        incorrect_aq: bundle(TemplateOrder::AQ, incorrect_aq)?,
    })
}
