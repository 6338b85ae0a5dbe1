//! Controlled Markov chains, stationary policies, and the kernel class `𝒬`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance for probability rows summing to one. Rows are rejected, never
/// renormalized.
pub const PROB_TOL: f64 = 1e-12;

/// Dense square matrix stored row-major as nested vectors.
pub type Matrix = Vec<Vec<f64>>;

/// Finite controlled Markov chain with a state-independent action set.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    state_labels: Vec<String>,
    action_labels: Vec<String>,
    // kernel[u][i][j] = p(j | i, u)
    kernel: Vec<Matrix>,
    // cost[i][u] = c(i, u)
    cost: Vec<Vec<f64>>,
}

fn check_row(row: &[f64], state: usize, action: Option<usize>) -> Result<()> {
    for (j, &p) in row.iter().enumerate() {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::BadProbability { state, action, target: j, value: p });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::RowSum { state, action, deviation: sum - 1.0 });
    }
    Ok(())
}

impl MdpModel {
    /// Build and validate a model. `kernel` is indexed `[action][from][to]`,
    /// `cost` is indexed `[state][action]`.
    pub fn new(
        state_labels: Vec<String>,
        action_labels: Vec<String>,
        kernel: Vec<Matrix>,
        cost: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let s = state_labels.len();
        let a = action_labels.len();
        if s == 0 || a == 0 {
            return Err(Error::EmptyModel);
        }
        if kernel.len() != a {
            return Err(Error::DimensionMismatch { what: "kernel actions", expected: a, found: kernel.len() });
        }
        for (u, m) in kernel.iter().enumerate() {
            if m.len() != s {
                return Err(Error::DimensionMismatch { what: "kernel rows", expected: s, found: m.len() });
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != s {
                    return Err(Error::DimensionMismatch { what: "kernel columns", expected: s, found: row.len() });
                }
                check_row(row, i, Some(u))?;
            }
        }
        if cost.len() != s {
            return Err(Error::DimensionMismatch { what: "cost rows", expected: s, found: cost.len() });
        }
        for (i, row) in cost.iter().enumerate() {
            if row.len() != a {
                return Err(Error::DimensionMismatch { what: "cost columns", expected: a, found: row.len() });
            }
            if let Some(u) = row.iter().position(|c| !c.is_finite()) {
                return Err(Error::NonFiniteCost { state: i, action: u });
            }
        }
        Ok(MdpModel { state_labels, action_labels, kernel, cost })
    }

    /// Model with generated labels `s0, s1, ...` and `a0, a1, ...`.
    pub fn unlabeled(kernel: Vec<Matrix>, cost: Vec<Vec<f64>>) -> Result<Self> {
        let s = cost.len();
        let a = kernel.len();
        let states = (0..s).map(|i| format!("s{i}")).collect();
        let actions = (0..a).map(|u| format!("a{u}")).collect();
        Self::new(states, actions, kernel, cost)
    }

    /// Uncontrolled (single-action) model.
    pub fn uncontrolled(kernel: Matrix, cost: Vec<f64>) -> Result<Self> {
        Self::unlabeled(vec![kernel], cost.into_iter().map(|c| vec![c]).collect())
    }

    pub fn num_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_labels.len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    /// `p(j | i, u)`.
    #[inline]
    pub fn p(&self, i: usize, u: usize, j: usize) -> f64 {
        self.kernel[u][i][j]
    }

    /// The row `p(· | i, u)`.
    #[inline]
    pub fn row(&self, i: usize, u: usize) -> &[f64] {
        &self.kernel[u][i]
    }

    /// `c(i, u)`.
    #[inline]
    pub fn cost(&self, i: usize, u: usize) -> f64 {
        self.cost[i][u]
    }

    pub fn kernel(&self) -> &[Matrix] {
        &self.kernel
    }

    pub fn costs(&self) -> &[Vec<f64>] {
        &self.cost
    }

    /// Same transitions, costs replaced.
    pub fn with_costs(&self, cost: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.state_labels.clone(), self.action_labels.clone(), self.kernel.clone(), cost)
    }

    fn check_state(&self, i: usize) -> Result<()> {
        if i >= self.num_states() {
            return Err(Error::OutOfRange { what: "state", index: i, len: self.num_states() });
        }
        Ok(())
    }

    /// Successors reachable from `i` under some action:
    /// `{ j : max_u p(j | i, u) > 0 }`, in increasing order.
    pub fn union_support(&self, i: usize) -> Result<Vec<usize>> {
        self.check_state(i)?;
        Ok(self.union_support_unchecked(i))
    }

    pub(crate) fn union_support_unchecked(&self, i: usize) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&j| self.kernel.iter().any(|m| m[i][j] > 0.0))
            .collect()
    }

    /// Kernel and running cost induced by a stationary policy:
    /// `p_v(j|i) = Σ_u p(j|i,u) φ(u|i)`, `c_v(i) = Σ_u c(i,u) φ(u|i)`.
    pub fn apply_policy(&self, policy: &StationaryPolicy) -> Result<(Matrix, Vec<f64>)> {
        let s = self.num_states();
        if policy.num_states() != s {
            return Err(Error::DimensionMismatch { what: "policy states", expected: s, found: policy.num_states() });
        }
        if policy.num_actions() != self.num_actions() {
            return Err(Error::DimensionMismatch {
                what: "policy actions",
                expected: self.num_actions(),
                found: policy.num_actions(),
            });
        }
        let mut kernel = vec![vec![0.0; s]; s];
        let mut cost = vec![0.0; s];
        for i in 0..s {
            for (u, &w) in policy.row(i).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                cost[i] += w * self.cost[i][u];
                for (k, &p) in kernel[i].iter_mut().zip(&self.kernel[u][i]) {
                    *k += w * p;
                }
            }
        }
        Ok((kernel, cost))
    }
}

/// Randomized stationary policy `φ(u | i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    rows: Matrix,
}

impl StationaryPolicy {
    pub fn new(rows: Matrix) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyModel);
        }
        let a = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != a {
                return Err(Error::DimensionMismatch { what: "policy row", expected: a, found: row.len() });
            }
            check_row(row, i, None)?;
        }
        Ok(StationaryPolicy { rows })
    }

    /// Same action distribution at every state.
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let w = 1.0 / num_actions as f64;
        StationaryPolicy { rows: vec![vec![w; num_actions]; num_states] }
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_actions(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `θ·self + (1-θ)·other`.
    pub fn mix(&self, other: &StationaryPolicy, theta: f64) -> Result<Self> {
        if self.num_states() != other.num_states() || self.num_actions() != other.num_actions() {
            return Err(Error::DimensionMismatch {
                what: "policy mixture",
                expected: self.num_states(),
                found: other.num_states(),
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| theta * x + (1.0 - theta) * y).collect())
            .collect();
        Ok(StationaryPolicy { rows })
    }
}

/// Deterministic stationary policy `i ↦ v(i)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PurePolicy {
    choice: Vec<usize>,
}

impl PurePolicy {
    pub fn new(choice: Vec<usize>, num_actions: usize) -> Result<Self> {
        if let Some(&u) = choice.iter().find(|&&u| u >= num_actions) {
            return Err(Error::OutOfRange { what: "action", index: u, len: num_actions });
        }
        Ok(PurePolicy { choice })
    }

    pub fn action(&self, i: usize) -> usize {
        self.choice[i]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choice
    }

    pub fn num_states(&self) -> usize {
        self.choice.len()
    }

    /// Dirac rows.
    pub fn to_stationary(&self, num_actions: usize) -> StationaryPolicy {
        let rows = self
            .choice
            .iter()
            .map(|&u| {
                let mut r = vec![0.0; num_actions];
                r[u] = 1.0;
                r
            })
            .collect();
        StationaryPolicy { rows }
    }
}

/// Row-stochastic matrix vanishing outside the union support of the model
/// (membership in `𝒬`).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: Matrix,
}

impl KernelMatrix {
    pub fn new(model: &MdpModel, rows: Matrix) -> Result<Self> {
        let s = model.num_states();
        if rows.len() != s {
            return Err(Error::DimensionMismatch { what: "kernel rows", expected: s, found: rows.len() });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != s {
                return Err(Error::DimensionMismatch { what: "kernel columns", expected: s, found: row.len() });
            }
            check_row(row, i, None)?;
            check_support(model, i, row)?;
        }
        Ok(KernelMatrix { rows })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Matrix {
        self.rows
    }
}

/// `q(j) > 0` only where `max_u p(j | i, u) > 0`.
pub(crate) fn check_support(model: &MdpModel, i: usize, qrow: &[f64]) -> Result<()> {
    for (j, &q) in qrow.iter().enumerate() {
        if q > 0.0 && model.kernel.iter().all(|m| m[i][j] == 0.0) {
            return Err(Error::SupportViolation { state: i, target: j });
        }
    }
    Ok(())
}

/// The two-state uncontrolled chain with an absorbing zero-cost state and a
/// unit-cost state that stays put with probability `rho`.
pub fn two_state_example(rho: f64) -> Result<MdpModel> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} is not in (0,1)")));
    }
    MdpModel::new(
        vec!["1".into(), "2".into()],
        vec!["u".into()],
        vec![vec![vec![1.0, 0.0], vec![1.0 - rho, rho]]],
        vec![vec![0.0], vec![1.0]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_policy_application() {
        let m = two_state_example(0.8).unwrap();
        let (k, c) = m.apply_policy(&StationaryPolicy::uniform(2, 1)).unwrap();
        assert_eq!(k, vec![vec![1.0, 0.0], vec![1.0 - 0.8, 0.8]]);
        assert_eq!(c, vec![0.0, 1.0]);
    }

    #[test]
    fn union_support_of_example() {
        let m = two_state_example(0.8).unwrap();
        assert_eq!(m.union_support(0).unwrap(), vec![0]);
        assert_eq!(m.union_support(1).unwrap(), vec![0, 1]);
        assert!(matches!(m.union_support(2), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn rejects_short_rows() {
        let err = MdpModel::uncontrolled(vec![vec![0.9]], vec![0.0]).unwrap_err();
        match err {
            Error::RowSum { state: 0, action: Some(0), deviation } => {
                assert!((deviation + 0.1).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_single_state() {
        let m = MdpModel::uncontrolled(vec![vec![1.0]], vec![0.0]).unwrap();
        assert_eq!(m.num_states(), 1);
        assert_eq!(m.num_actions(), 1);
    }

    #[test]
    fn pure_and_uniform_policies() {
        let m = MdpModel::unlabeled(
            vec![
                vec![vec![0.3, 0.7], vec![1.0, 0.0]],
                vec![vec![0.9, 0.1], vec![0.5, 0.5]],
            ],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        )
        .unwrap();
        let pure = PurePolicy::new(vec![1, 0], 2).unwrap();
        let (k, c) = m.apply_policy(&pure.to_stationary(2)).unwrap();
        assert_eq!(k[0], m.row(0, 1));
        assert_eq!(k[1], m.row(1, 0));
        assert_eq!(c, vec![2.0, 3.0]);

        let (k, c) = m.apply_policy(&StationaryPolicy::uniform(2, 2)).unwrap();
        for j in 0..2 {
            assert!((k[0][j] - 0.5 * (m.p(0, 0, j) + m.p(0, 1, j))).abs() < 1e-15);
        }
        assert_eq!(c, vec![1.5, 3.5]);
    }

    #[test]
    fn kernel_matrix_support_is_enforced() {
        let m = two_state_example(0.5).unwrap();
        assert!(KernelMatrix::new(&m, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_ok());
        let err = KernelMatrix::new(&m, vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap_err();
        assert_eq!(err, Error::SupportViolation { state: 0, target: 1 });
    }

    #[test]
    fn policy_dimension_mismatch() {
        let m = two_state_example(0.5).unwrap();
        let p = StationaryPolicy::uniform(3, 1);
        assert!(matches!(m.apply_policy(&p), Err(Error::DimensionMismatch { .. })));
    }
}
