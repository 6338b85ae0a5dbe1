use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskmdp_core::game::{self, CongenConfig, SequenceConfig};
use riskmdp_core::grid::{self, binomial};
use riskmdp_core::model::two_state_example;
use riskmdp_core::oracle::{self, PowerConfig};
use riskmdp_core::sample::{random_model, random_row, ModelShape};
use riskmdp_core::MdpModel;

fn models(seed: u64, count: usize) -> Vec<MdpModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let shape = ModelShape { num_states: 2 + k % 2, num_actions: 2, extra_successors: 1, min_prob: 0.05 };
            random_model(&mut rng, &shape).unwrap()
        })
        .collect()
}

#[test]
fn grid_counts_follow_stars_and_bars() {
    for k in 1..=4usize {
        for n in 0..=6u32 {
            let rows = grid::enumerate_rows(k, n).unwrap();
            let expected = binomial((1u128 << n) + k as u128 - 1, k as u128 - 1);
            assert_eq!(rows.len() as u128, expected);
            assert_eq!(grid::row_count(k, n), expected);
            assert!(rows.iter().all(|r| r.iter().sum::<u64>() == 1 << n));
        }
    }
}

#[test]
fn grids_are_nested() {
    for m in models(7, 4) {
        for n in 1..6 {
            let coarse = grid::build_grid(&m, n).unwrap();
            let fine = grid::build_grid(&m, n + 1).unwrap();
            for i in 0..m.num_states() {
                for row in &coarse.rows[i] {
                    assert!(fine.rows[i].iter().any(|r| r.probs == row.probs));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grids_are_dense(seed in any::<u64>(), n in 1u32..7) {
        let m = &models(seed, 1)[0];
        let g = grid::build_grid(m, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for i in 0..m.num_states() {
            let target = random_row(&mut rng, m.num_states(), &m.union_support(i).unwrap());
            let near = g.nearest(i, &target);
            let dist = near.probs.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(dist <= m.num_states() as f64 / f64::from(1u32 << n));
        }
    }
}

#[test]
fn every_lp_closes_its_duality_gap() {
    for m in models(11, 6) {
        for n in 2..=5 {
            let sol = game::solve_game(&m, n).unwrap();
            assert_abs_diff_eq!(sol.sum_beta, sol.sum_w, epsilon = 1e-8);
            assert!(sol.dual_identity_residual() <= 1e-8);
            assert!(sol.primal_violation <= 1e-8);
            assert!(sol.dual_violation <= 1e-8);
        }
    }
}

#[test]
fn sequence_is_nondecreasing_in_resolution() {
    for m in models(13, 4) {
        let cfg = SequenceConfig { n_max: 7, stop_tol: 0.0, ..Default::default() };
        let report = game::solve_sequence(&m, &cfg).unwrap();
        assert_eq!(report.records.len(), 6);
        assert!(report.max_decrease <= 1e-7);
        let report = game::solve_sequence(&m, &SequenceConfig::default()).unwrap();
        assert!(report.feasibility.passed, "{:?}", report.feasibility);
    }
}

#[test]
fn value_is_the_rate_of_the_geometric_mixture() {
    for m in models(17, 6) {
        let out = game::solve_congen(&m, &CongenConfig::default()).unwrap();
        assert!(out.certified);
        let mixed = oracle::mixed_game_rate(&m, &out.solution.minimizer, &PowerConfig::default()).unwrap();
        for (beta, lambda) in out.solution.value.iter().zip(&mixed.lambda) {
            assert_abs_diff_eq!(*beta, *lambda, epsilon = 1e-4);
        }
        let bf = oracle::brute_force_lambda_star(&m).unwrap();
        assert!(out.solution.value_max() <= bf.value + 1e-6);
    }
}

#[test]
fn two_state_example_at_resolution_six() {
    let m = two_state_example(0.8).unwrap();
    let sol = game::solve_game(&m, 6).unwrap();
    let target = 1.0 + 0.8f64.ln();
    assert_abs_diff_eq!(sol.value[0], 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.value[1], target, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.sum_w, target, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.maximizer.row(1)[1], 1.0, epsilon = 1e-12);

    let sub = two_state_example((-2.0f64).exp()).unwrap();
    let sol = game::solve_game(&sub, 8).unwrap();
    assert!(sol.value_max().abs() <= 1e-9);
    let q22 = sol.maximizer.row(1)[1];
    assert!(q22 > 0.0 && q22 < 1.0);
    assert_abs_diff_eq!(q22, (-1.0f64).exp(), epsilon = 1.0 / 256.0);

    let congen = game::solve_congen(&m, &CongenConfig::default()).unwrap();
    assert!(congen.rounds <= 20);
    assert_abs_diff_eq!(congen.solution.value_max(), target, epsilon = 1e-4);
}
