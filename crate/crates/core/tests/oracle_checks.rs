use nalgebra::DMatrix;
use self_indicator::indicator::{score_candidate, CombineMode, ScoreConfig};
use self_indicator::linalg::{correlation_matrix, numerical_rank, singular_values_of, NormalizationMode, RepMatrix};
use self_indicator::oracle::{
    attention_step, generate_correct_solution, generate_incorrect_solution, krylov_rank_check, make_low_rank_w,
    run_trials, sample_instance, sample_problem_tokens, synthetic_pair, w_star, OracleConfig,
};
use self_indicator::pipeline::CandidateSpectra;
use self_indicator::voting::{pairwise_decision, Choice};

fn rank(m: &DMatrix<f64>) -> usize {
    numerical_rank(&singular_values_of(m).unwrap())
}

#[test]
fn w_star_matches_explicit_outer_product_sum() {
    let problem = sample_problem_tokens(5, 7, 11).unwrap();
    let w = make_low_rank_w(7, 3, 12).unwrap();
    let fast = w_star(&w, &problem).unwrap();
    let mut slow = DMatrix::<f64>::zeros(7, 7);
    for r in 0..problem.rows() {
        let n_r = problem.row(r);
        for i in 0..7 {
            // (W n_r)_i
            let mut wn = 0.0;
            for k in 0..7 {
                wn += w[(i, k)] * n_r[k];
            }
            for j in 0..7 {
                slow[(i, j)] += wn * n_r[j];
            }
        }
    }
    assert!((fast - slow).abs().max() < 1e-10);
}

#[test]
fn attention_matches_direct_sum() {
    let w = make_low_rank_w(6, 6, 3).unwrap();
    let ctx = sample_problem_tokens(4, 6, 4).unwrap();
    let q = sample_problem_tokens(1, 6, 5).unwrap();
    let q = q.row(0);
    let contexts: Vec<&[f64]> = ctx.iter_rows().collect();
    let out = attention_step(q, &contexts, &w).unwrap();

    let mut scores = Vec::new();
    for k in &contexts {
        let mut s = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                s += q[a] * w[(a, b)] * k[b];
            }
        }
        scores.push(s);
    }
    let total: f64 = scores.iter().sum();
    for d in 0..6 {
        let expected: f64 = contexts.iter().zip(&scores).map(|(k, s)| s / total * k[d]).sum();
        assert!((out[d] - expected).abs() < 1e-9 * expected.abs().max(1.0));
    }
}

#[test]
fn nilpotent_w_gives_krylov_dimension_one() {
    let mut w = DMatrix::<f64>::zeros(4, 4);
    w[(3, 0)] = 1.0;
    w[(1, 2)] = 2.0;
    let identity: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
    let problem = RepMatrix::new(4, 4, identity).unwrap();
    let check = krylov_rank_check(&problem, &w, 5).unwrap();
    assert_eq!(check.v, 2);
    assert_eq!(check.dim_a, 1);
}

#[test]
fn correct_solution_rank_bounded_by_w_star() {
    // small well-conditioned case where the exact rank is visible in f64
    let config = OracleConfig { n: 8, d: 16, r: 2, m: 10, eta: 4, noise_len: 3, trials: 20, ..OracleConfig::default() };
    let report = run_trials(&config).unwrap();
    for t in &report.trials {
        assert!(t.rank_r_correct <= t.v);
        assert!(t.rank_r_incorrect > t.rank_r_correct);
        assert_eq!(t.krylov_dim, t.v);
        assert_eq!(t.lemma_rank, t.v);
    }
    assert!(report.aggregates.frac_correct_match >= 0.95, "{:?}", report.aggregates);
}

#[test]
fn noise_saturates_at_problem_length() {
    let config = OracleConfig { noise_len: 20, trials: 10, ..OracleConfig::default() };
    let report = run_trials(&config).unwrap();
    for t in &report.trials {
        assert_eq!(t.rank_r_incorrect, config.n.min(t.v + config.noise_len));
        assert_eq!(t.predicted_incorrect, config.n);
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    let config = OracleConfig { trials: 4, ..OracleConfig::default() };
    let a = sample_instance(&config, 3, 40).unwrap();
    let b = sample_instance(&config, 3, 40).unwrap();
    assert_eq!(a.correct, b.correct);
    assert_eq!(a.incorrect, b.incorrect);
    assert_eq!(run_trials(&config).unwrap(), run_trials(&config).unwrap());
}

#[test]
fn incorrect_solution_keeps_prefix() {
    let problem = sample_problem_tokens(6, 12, 1).unwrap();
    let w = make_low_rank_w(12, 3, 2).unwrap();
    let correct = generate_correct_solution(&problem, &w, 8, (0.5, 2.0), 3).unwrap();
    let incorrect = generate_incorrect_solution(&correct, 5, 4, 12, 4).unwrap();
    assert_eq!(incorrect.rows(), 9);
    for i in 0..5 {
        assert_eq!(incorrect.row(i), correct.row(i));
    }
    let r = correlation_matrix(&incorrect, &problem, NormalizationMode::Raw).unwrap();
    assert!(rank(r.entries()) <= 6);
}

#[test]
fn score_routes_agree() {
    let config = OracleConfig { trials: 10, ..OracleConfig::default() };
    for index in 0..5 {
        let pair = synthetic_pair(&config, index).unwrap();
        for mode in [NormalizationMode::Raw, NormalizationMode::UnitRows, NormalizationMode::Spectral] {
            for delta in [0.0, 0.5, 1.75] {
                for combine in [CombineMode::Add, CombineMode::Mul] {
                    let direct = score_candidate(
                        &pair.correct_qa,
                        &pair.correct_aq,
                        &ScoreConfig { delta, combine, normalization: mode },
                    )
                    .unwrap();
                    let cached = CandidateSpectra::from_bundles(&pair.correct_qa, &pair.correct_aq, mode)
                        .unwrap()
                        .score(delta, combine)
                        .unwrap();
                    assert_eq!(direct, cached);
                }
            }
        }
    }
}

#[test]
fn synthetic_pairs_prefer_correct_solution() {
    let config = OracleConfig { trials: 100, ..OracleConfig::default() };
    let score_config = ScoreConfig { delta: 0.0, combine: CombineMode::Add, normalization: NormalizationMode::Spectral };
    let mut right = 0;
    for index in 0..100 {
        let pair = synthetic_pair(&config, index).unwrap();
        let c = score_candidate(&pair.correct_qa, &pair.correct_aq, &score_config).unwrap();
        let i = score_candidate(&pair.incorrect_qa, &pair.incorrect_aq, &score_config).unwrap();
        let decision = pairwise_decision(c.score, i.score);
        if decision.choice == Choice::First && !decision.tie {
            right += 1;
        }
    }
    assert!(right >= 99, "{right}/100");
}
