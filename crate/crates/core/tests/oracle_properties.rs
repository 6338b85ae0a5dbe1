use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use riskmdp_core::oracle::{self, PowerConfig};
use riskmdp_core::{MdpModel, StationaryPolicy};

/// Stochastic rows with every entry at least `floor`, so the chain is
/// irreducible and aperiodic.
fn positive_kernel(s: usize, floor: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(floor..1.0f64, s), s).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let t: f64 = r.iter().sum();
                r.into_iter().map(|x| x / t).collect()
            })
            .collect()
    })
}

/// Rows with some zeros: each state keeps itself and one successor.
fn sparse_kernel(s: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec((0.05..0.95f64, 0..s), s).prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (stay, j))| {
                let mut r = vec![0.0; s];
                r[i] += stay;
                r[j] += 1.0 - stay;
                r
            })
            .collect()
    })
}

fn distribution(s: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, s).prop_map(|r| {
        let t: f64 = r.iter().sum::<f64>() + 1e-12;
        r.into_iter().map(|x| x / t).collect()
    })
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kl_is_nonnegative(q in distribution(4), p in distribution(4)) {
        prop_assert!(oracle::kl_divergence(&q, &p) >= 0.0);
        prop_assert!(oracle::kl_divergence(&p, &p).abs() < 1e-12);
    }

    #[test]
    fn cost_shift_moves_every_rate(
        k1 in sparse_kernel(3),
        k2 in sparse_kernel(3),
        cost in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 3),
    ) {
        let model = MdpModel::unlabeled(vec![k1, k2], cost.clone()).unwrap();
        let shifted = model.with_costs(cost.iter().map(|r| r.iter().map(|c| c + 0.7).collect()).collect()).unwrap();
        let policy = StationaryPolicy::uniform(3, 2);
        let a = oracle::growth_rate(&model, &policy).unwrap();
        let b = oracle::growth_rate(&shifted, &policy).unwrap();
        for (x, y) in a.lambda.iter().zip(&b.lambda) {
            assert_abs_diff_eq!(y - x, 0.7, epsilon = 1e-8);
        }
        let bf = oracle::brute_force_lambda_star(&model).unwrap();
        let bf_shifted = oracle::brute_force_lambda_star(&shifted).unwrap();
        assert_abs_diff_eq!(bf_shifted.value - bf.value, 0.7, epsilon = 1e-8);
        prop_assert_eq!(bf.argmin, bf_shifted.argmin);
    }

    #[test]
    fn rate_is_log_perron_root(kernel in positive_kernel(4, 0.02), cost in prop::collection::vec(0.0..2.0f64, 4)) {
        let m = DMatrix::from_fn(4, 4, |i, j| cost[i].exp() * kernel[i][j]);
        let root = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let rates = oracle::twisted_growth(&kernel, &cost, &PowerConfig::default());
        prop_assert!(rates.converged);
        for l in rates.lambda {
            assert_abs_diff_eq!(l, root.ln(), epsilon = 1e-7);
        }
    }

    #[test]
    fn cesaro_limit_is_an_invariant_projection(kernel in sparse_kernel(4)) {
        let q = oracle::cesaro_limit(&kernel).unwrap();
        let qq = matmul(&q, &q);
        let qp = matmul(&q, &kernel);
        let pq = matmul(&kernel, &q);
        for i in 0..4 {
            assert_abs_diff_eq!(q[i].iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            for j in 0..4 {
                assert_abs_diff_eq!(qq[i][j], q[i][j], epsilon = 1e-8);
                assert_abs_diff_eq!(qp[i][j], q[i][j], epsilon = 1e-8);
                assert_abs_diff_eq!(pq[i][j], q[i][j], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn gibbs_row_maximizes_the_penalized_value(
        p in positive_kernel(4, 0.05).prop_map(|rows| rows[0].clone()),
        values in prop::collection::vec(-2.0..2.0f64, 4),
        other in distribution(4),
    ) {
        let (q, best) = oracle::gibbs_maximizer(&p, &values);
        let score = |r: &[f64]| r.iter().zip(&values).map(|(a, b)| a * b).sum::<f64>() - oracle::kl_divergence(r, &p);
        assert_abs_diff_eq!(score(&q), best, epsilon = 1e-10);
        prop_assert!(score(&other) <= best + 1e-10);
    }
}
