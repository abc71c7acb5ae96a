//! Independent reference implementations checked against the library.

use proptest::prelude::*;
use self_indicator::linalg::{
    correlation_matrix, normalized_rank, singular_values, singular_values_of, thresholded_rank, NormalizationMode,
    RepMatrix, ZERO_CUTOFF,
};

/// One-sided Jacobi SVD on the columns of a row-major `rows × cols` matrix.
fn jacobi_singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    // work on the wider orientation transposed so columns <= rows
    let (r, c, mut u) = if rows >= cols {
        (rows, cols, a.to_vec())
    } else {
        let mut t = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = a[i * cols + j];
            }
        }
        (cols, rows, t)
    };
    let at = |m: &Vec<f64>, i: usize, j: usize| m[i * c + j];
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..c {
            for q in (p + 1)..c {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..r {
                    let x = at(&u, i, p);
                    let y = at(&u, i, q);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..r {
                    let x = at(&u, i, p);
                    let y = at(&u, i, q);
                    u[i * c + p] = cs * x - sn * y;
                    u[i * c + q] = sn * x + cs * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = (0..c).map(|j| (0..r).map(|i| at(&u, i, j).powi(2)).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn dot_loop(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 0..a.len() {
        acc += a[k] * b[k];
    }
    acc
}

fn rep(rows: usize, dim: usize, data: Vec<f64>) -> RepMatrix {
    RepMatrix::new(rows, dim, data).unwrap()
}

fn matrix_strategy(max_rows: usize, dim: usize) -> impl Strategy<Value = RepMatrix> {
    (1..=max_rows).prop_flat_map(move |rows| {
        prop::collection::vec(-3.0..3.0_f64, rows * dim).prop_map(move |data| rep(rows, dim, data))
    })
}

fn pair_strategy() -> impl Strategy<Value = (RepMatrix, RepMatrix)> {
    (1usize..=8).prop_flat_map(|d| (matrix_strategy(10, d), matrix_strategy(8, d)))
}

fn mode_strategy() -> impl Strategy<Value = NormalizationMode> {
    prop_oneof![
        Just(NormalizationMode::Raw),
        Just(NormalizationMode::UnitRows),
        Just(NormalizationMode::Spectral)
    ]
}

fn rank_at(h: &RepMatrix, n: &RepMatrix, mode: NormalizationMode, delta: f64) -> usize {
    normalized_rank(&correlation_matrix(h, n, mode).unwrap(), delta).unwrap().raw_rank
}

#[test]
fn correlation_matches_double_loop() {
    let h = rep(3, 4, vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.0, 1.0, 1.0, -1.5, 2.5, 0.25, -0.75]);
    let n = rep(2, 4, vec![2.0, 0.0, -1.0, 1.0, 0.5, 0.5, 0.5, 0.5]);
    let r = correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap();
    for i in 0..3 {
        for j in 0..2 {
            assert!((r.get(i, j) - dot_loop(h.row(i), n.row(j))).abs() < 1e-12);
        }
    }
}

#[test]
fn svd_matches_jacobi_on_fixed_case() {
    let data = vec![4.0, 0.0, 3.0, -5.0, 1.0, 2.0, 0.0, 0.0, 7.0, 2.0, -2.0, 1.0];
    let m = nalgebra::DMatrix::from_row_slice(4, 3, &data);
    let ours = singular_values_of(&m).unwrap();
    let reference = jacobi_singular_values(&data, 4, 3);
    for (a, b) in ours.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-8, "{ours:?} vs {reference:?}");
    }
}

#[test]
fn zero_cutoff_drops_round_off_directions() {
    // rank-1 matrix with a perturbation far below the relative cutoff
    let spectrum = [10.0, 10.0 * ZERO_CUTOFF * 0.5, 0.0];
    assert_eq!(thresholded_rank(&spectrum, 0.0, NormalizationMode::Raw, 10.0).unwrap(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn correlation_entries_match_double_loop((h, n) in pair_strategy(), mode in mode_strategy()) {
        let r = correlation_matrix(&h, &n, mode).unwrap();
        let unit = |v: &[f64]| -> Vec<f64> {
            let norm = dot_loop(v, v).sqrt();
            if norm == 0.0 { v.to_vec() } else { v.iter().map(|x| x / norm).collect() }
        };
        for i in 0..h.rows() {
            for j in 0..n.rows() {
                let expected = match mode {
                    NormalizationMode::UnitRows => dot_loop(&unit(h.row(i)), &unit(n.row(j))),
                    _ => dot_loop(h.row(i), n.row(j)),
                };
                prop_assert!((r.get(i, j) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_values_match_jacobi((h, n) in pair_strategy()) {
        let r = correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap();
        let ours = singular_values(&r).unwrap();
        let flat: Vec<f64> = (0..r.m()).flat_map(|i| (0..r.n()).map(move |j| (i, j))).map(|(i, j)| r.get(i, j)).collect();
        let reference = jacobi_singular_values(&flat, r.m(), r.n());
        prop_assert_eq!(ours.len(), reference.len());
        let scale = reference[0].max(1.0);
        for (a, b) in ours.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-8 * scale, "{:?} vs {:?}", ours, reference);
        }
    }

    #[test]
    fn frobenius_identity((h, n) in pair_strategy()) {
        let r = correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap();
        let spectrum = singular_values(&r).unwrap();
        let fro: f64 = r.entries().iter().map(|x| x * x).sum();
        let sum_sq: f64 = spectrum.iter().map(|s| s * s).sum();
        prop_assert!((fro - sum_sq).abs() <= 1e-9 * fro.max(1.0));
    }

    #[test]
    fn spectrum_sorted_non_negative((h, n) in pair_strategy()) {
        let r = correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap();
        let s = singular_values(&r).unwrap();
        prop_assert!(s.iter().all(|&x| x >= 0.0));
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_bounded_by_shape((h, n) in pair_strategy(), mode in mode_strategy(), delta in 0.0..3.0_f64) {
        let rank = rank_at(&h, &n, mode, delta);
        prop_assert!(rank <= h.rows().min(n.rows()).min(h.dim()));
    }

    #[test]
    fn rank_non_increasing_in_delta((h, n) in pair_strategy(), mode in mode_strategy(), a in 0.0..3.0_f64, b in 0.0..3.0_f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rank_at(&h, &n, mode, lo) >= rank_at(&h, &n, mode, hi));
    }

    #[test]
    fn rank_invariant_under_row_permutation((h, n) in pair_strategy(), mode in mode_strategy(), delta in 0.0..2.0_f64, shift in 0usize..10) {
        let rotate = |m: &RepMatrix, by: usize| {
            let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row((i + by) % m.rows()).to_vec()).collect();
            RepMatrix::from_rows(&rows).unwrap()
        };
        let base = rank_at(&h, &n, mode, delta);
        let permuted = rank_at(&rotate(&h, shift), &rotate(&n, shift + 1), mode, delta);
        // a singular value sitting on the threshold can flip under round-off
        let r = correlation_matrix(&h, &n, mode).unwrap();
        let s = singular_values(&r).unwrap();
        let scale = if mode == NormalizationMode::Spectral { s[0].max(f64::MIN_POSITIVE) } else { 1.0 };
        let near = s.iter().any(|&x| (x / scale - delta).abs() < 1e-9);
        prop_assert!(near || base == permuted);
    }

    #[test]
    fn duplicated_solution_row_keeps_raw_rank((h, n) in pair_strategy(), pick in 0usize..10) {
        let i = pick % h.rows();
        let dup = h.vstack(&RepMatrix::from_rows(&[h.row(i)]).unwrap()).unwrap();
        prop_assert_eq!(rank_at(&h, &n, NormalizationMode::Raw, 0.0), rank_at(&dup, &n, NormalizationMode::Raw, 0.0));
    }

    #[test]
    fn spectral_mode_scale_invariant((h, n) in pair_strategy(), c in 0.01..100.0_f64, delta in 0.0..1.0_f64) {
        let base = rank_at(&h, &n, NormalizationMode::Spectral, delta);
        let scaled = rank_at(&h.scaled(c).unwrap(), &n, NormalizationMode::Spectral, delta);
        let r = correlation_matrix(&h, &n, NormalizationMode::Spectral).unwrap();
        let s = singular_values(&r).unwrap();
        let near = s[0] > 0.0 && s.iter().any(|&x| (x / s[0] - delta).abs() < 1e-9);
        prop_assert!(near || base == scaled);
    }

    #[test]
    fn normalized_rank_divides_by_solution_length((h, n) in pair_strategy(), delta in 0.0..2.0_f64) {
        let est = normalized_rank(&correlation_matrix(&h, &n, NormalizationMode::Raw).unwrap(), delta).unwrap();
        prop_assert!((est.normalized_rank - est.raw_rank as f64 / h.rows() as f64).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&est.normalized_rank));
    }
}
