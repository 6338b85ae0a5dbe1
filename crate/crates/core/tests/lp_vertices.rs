use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use riskmdp_core::lp::{self, LinearProgram, LpStatus, Relation, Sense};

/// Best objective over all basic feasible points of
/// `min c·x, A x ≤ b, x ≥ 0`, by enumerating which `n` constraints are tight.
fn vertex_optimum(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let mut best = f64::INFINITY;
    let m = rows.len();
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let tight: Vec<&(Vec<f64>, f64)> = (0..m).filter(|k| mask & (1 << k) != 0).map(|k| &rows[k]).collect();
        let mat = DMatrix::from_fn(n, n, |r, col| tight[r].0[col]);
        let rhs = DVector::from_fn(n, |r, _| tight[r].1);
        let Some(x) = mat.lu().solve(&rhs) else { continue };
        let feasible = rows.iter().all(|(row, bound)| row.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= bound + 1e-9);
        if feasible {
            best = best.min(c.iter().zip(x.iter()).map(|(p, q)| p * q).sum());
        }
    }
    best
}

fn problem() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let n = 3;
    (
        prop::collection::vec(-1.0..1.0f64, n),
        prop::collection::vec(prop::collection::vec(-1.0..2.0f64, n), 3),
        prop::collection::vec(0.1..3.0f64, 3),
    )
        .prop_map(move |(c, mut a, mut b)| {
            // A budget row keeps the feasible set bounded.
            a.push(vec![1.0; n]);
            b.push(5.0);
            (c, a, b)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_matches_vertex_enumeration((c, a, b) in problem()) {
        let mut p = LinearProgram::new(Sense::Minimize);
        let x: Vec<usize> = c.iter().map(|&cj| p.add_nonneg(cj)).collect();
        for (row, &rhs) in a.iter().zip(&b) {
            let entries: Vec<(usize, f64)> = x.iter().copied().zip(row.iter().copied()).collect();
            p.add_constraint(&entries, Relation::Le, rhs);
        }
        let sol = lp::solve(&p).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, vertex_optimum(&c, &a, &b), epsilon = 1e-8);
        assert_abs_diff_eq!(sol.objective, sol.dual_objective, epsilon = 1e-8);
        prop_assert!(p.primal_residual(&sol.x) <= 1e-9);

        for (r, (row, &rhs)) in a.iter().zip(&b).enumerate() {
            let slack = rhs - row.iter().zip(&sol.x).map(|(p, q)| p * q).sum::<f64>();
            prop_assert!(sol.duals[r] <= 1e-12);
            prop_assert!((sol.duals[r] * slack).abs() <= 1e-8);
        }
        for (j, &xj) in sol.x.iter().enumerate() {
            prop_assert!(sol.reduced_costs[j] >= -1e-9);
            prop_assert!((sol.reduced_costs[j] * xj).abs() <= 1e-8);
        }
    }
}
