//! Independent ground truth for the LP pipeline.
//!
//! Per-policy growth rates come from log-rescaled power iteration on the
//! twisted matrix `M(i,j) = e^{c_v(i)} p_v(j|i)`; the optimal rate over pure
//! policies comes from exhaustive enumeration. Game payoffs are computed
//! through the Cesàro limit of the maximizer's kernel.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::linalg;
use crate::math::{exp, ln, log_sum_exp};
use crate::model::{check_support, KernelMatrix, Matrix, MdpModel, PurePolicy, StationaryPolicy};

/// `Σ_j q(j) log(q(j)/p(j))`, with `0 log 0 = 0` and `+∞` when `q` is not
/// absolutely continuous with respect to `p`.
pub fn kl_divergence(qrow: &[f64], prow: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&q, &p) in qrow.iter().zip(prow) {
        if q > 0.0 {
            if p <= 0.0 {
                return f64::INFINITY;
            }
            d += q * ln(q / p);
        }
    }
    // Rounding can leave tiny negative values when q == p.
    d.max(0.0)
}

/// KL-penalized reward `c̃(i,q,u) = c(i,u) - D(q ‖ p(·|i,u))`.
pub fn tilde_cost(model: &MdpModel, i: usize, qrow: &[f64], u: usize) -> Result<Ext> {
    if i >= model.num_states() {
        return Err(Error::OutOfRange { what: "state", index: i, len: model.num_states() });
    }
    if u >= model.num_actions() {
        return Err(Error::OutOfRange { what: "action", index: u, len: model.num_actions() });
    }
    if qrow.len() != model.num_states() {
        return Err(Error::DimensionMismatch { what: "kernel row", expected: model.num_states(), found: qrow.len() });
    }
    check_support(model, i, qrow)?;
    Ok(tilde_cost_unchecked(model, i, qrow, u))
}

pub(crate) fn tilde_cost_unchecked(model: &MdpModel, i: usize, qrow: &[f64], u: usize) -> Ext {
    let d = kl_divergence(qrow, model.row(i, u));
    if d.is_finite() {
        Ext::Finite(model.cost(i, u) - d)
    } else {
        Ext::NegInf
    }
}

/// Power-iteration settings for [`growth_rate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub rate_tol: f64,
    pub max_iters: usize,
    /// Length of the sliding window the per-step increments are averaged
    /// over. Even lengths cancel period-2 oscillation.
    pub window: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig { rate_tol: 1e-10, max_iters: 100_000, window: 32 }
    }
}

/// Per-state growth rates `λ_i^v` of a stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRates {
    pub lambda: Vec<f64>,
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn growth_rate(model: &MdpModel, policy: &StationaryPolicy) -> Result<GrowthRates> {
    growth_rate_with(model, policy, &PowerConfig::default())
}

pub fn growth_rate_with(model: &MdpModel, policy: &StationaryPolicy, cfg: &PowerConfig) -> Result<GrowthRates> {
    let (kernel, cost) = model.apply_policy(policy)?;
    Ok(twisted_growth(&kernel, &cost, cfg))
}

/// `lim (1/n) log (Mⁿ 1)_i` for `M(i,j) = e^{cost(i)} kernel(i,j)`.
///
/// Iterates in log space: `r` holds `log (Mᵗ 1) - L_t` where `L_t` is the
/// running maximum, so nothing overflows or underflows.
pub fn twisted_growth(kernel: &[Vec<f64>], cost: &[f64], cfg: &PowerConfig) -> GrowthRates {
    let s = cost.len();
    let window = cfg.window.max(2);
    let logp: Vec<Vec<(usize, f64)>> = kernel
        .iter()
        .map(|row| row.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, &p)| (j, ln(p))).collect())
        .collect();

    let mut r = vec![0.0; s];
    let mut next = vec![0.0; s];
    // ring[t % window][i] = per-step log increment of state i
    let mut ring = vec![vec![0.0; s]; window];
    let mut sums = vec![0.0; s];
    let mut estimate = vec![0.0; s];
    let mut converged = false;
    let mut iterations = 0;

    for t in 0..cfg.max_iters {
        for i in 0..s {
            next[i] = cost[i] + log_sum_exp(logp[i].iter().map(|&(j, lp)| lp + r[j]));
        }
        let shift = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slot = &mut ring[t % window];
        for i in 0..s {
            let inc = next[i] - r[i];
            sums[i] += inc - slot[i];
            slot[i] = inc;
            r[i] = next[i] - shift;
        }
        iterations = t + 1;
        if iterations < window {
            continue;
        }
        let mut delta: f64 = 0.0;
        for i in 0..s {
            let e = sums[i] / window as f64;
            delta = delta.max((e - estimate[i]).abs());
            estimate[i] = e;
        }
        if iterations >= 2 * window && delta < cfg.rate_tol {
            converged = true;
            break;
        }
    }
    if iterations < window {
        for i in 0..s {
            estimate[i] = sums[i] / iterations.max(1) as f64;
        }
    }
    let lambda_max = estimate.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GrowthRates { lambda: estimate, lambda_max, iterations, converged }
}

/// Growth rate of the game against a fixed randomized minimizer `y`.
///
/// Averaging KL penalties with weights `yᵢ(u)` equals one KL penalty
/// against the normalized geometric mean of the rows, minus the log of its
/// normalizer, so the maximizer's best ergodic payoff is the growth rate of
/// `M(i,j) = exp(Σᵤ yᵢ(u) c(i,u)) Πᵤ p(j|i,u)^{yᵢ(u)}`. For a pure policy this
/// is [`growth_rate`]; for a mixed one it can be strictly smaller.
pub fn mixed_game_rate(model: &MdpModel, y: &StationaryPolicy, cfg: &PowerConfig) -> Result<GrowthRates> {
    let s = model.num_states();
    let a = model.num_actions();
    if y.rows().len() != s {
        return Err(Error::DimensionMismatch { what: "policy rows", expected: s, found: y.rows().len() });
    }
    let mut kernel = vec![vec![0.0; s]; s];
    let mut cost = vec![0.0; s];
    for i in 0..s {
        let w = y.row(i);
        if w.len() != a {
            return Err(Error::DimensionMismatch { what: "policy row length", expected: a, found: w.len() });
        }
        cost[i] = (0..a).map(|u| w[u] * model.cost(i, u)).sum();
        for j in 0..s {
            let mut logp = 0.0;
            let mut reachable = true;
            for u in (0..a).filter(|&u| w[u] > 0.0) {
                let p = model.p(i, u, j);
                if p <= 0.0 {
                    reachable = false;
                    break;
                }
                logp += w[u] * ln(p);
            }
            if reachable {
                kernel[i][j] = exp(logp);
            }
        }
        if kernel[i].iter().all(|&p| p == 0.0) {
            return Err(Error::InvalidParameter("mixed actions share no successor".into()));
        }
    }
    Ok(twisted_growth(&kernel, &cost, cfg))
}

/// Largest policy count [`brute_force_lambda_star`] will enumerate.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// Result of exhaustive enumeration over pure policies.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub value: f64,
    pub argmin: PurePolicy,
    pub per_state: Vec<f64>,
    pub all_converged: bool,
}

/// Number of pure policies, `|𝒰|^s`, if it fits the guard.
pub fn pure_policy_count(model: &MdpModel) -> Result<u128> {
    let a = model.num_actions() as u128;
    let mut count: u128 = 1;
    for _ in 0..model.num_states() {
        count = count.saturating_mul(a);
        if count > ENUMERATION_GUARD {
            return Err(Error::GuardExceeded { what: "pure policy enumeration", count, limit: ENUMERATION_GUARD });
        }
    }
    Ok(count)
}

/// Iterate all pure policies in lexicographic order (state 0 most
/// significant).
pub fn for_each_pure_policy(model: &MdpModel, mut f: impl FnMut(&PurePolicy)) -> Result<()> {
    pure_policy_count(model)?;
    let s = model.num_states();
    let a = model.num_actions();
    let mut choice = vec![0usize; s];
    loop {
        f(&PurePolicy::new(choice.clone(), a)?);
        let mut k = s;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < a {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// `λ̄* = min_v max_i λ_i^v` over pure policies; ties go to the
/// lexicographically smallest policy.
pub fn brute_force_lambda_star(model: &MdpModel) -> Result<BruteForce> {
    let a = model.num_actions();
    let mut best: Option<BruteForce> = None;
    let mut all_converged = true;
    let mut failure = None;
    for_each_pure_policy(model, |v| {
        if failure.is_some() {
            return;
        }
        match growth_rate(model, &v.to_stationary(a)) {
            Ok(g) => {
                all_converged &= g.converged;
                let better = best.as_ref().is_none_or(|b| g.lambda_max < b.value - 1e-12);
                if better {
                    best = Some(BruteForce {
                        value: g.lambda_max,
                        argmin: v.clone(),
                        per_state: g.lambda,
                        all_converged: true,
                    });
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut best = best.expect("at least one pure policy");
    best.all_converged = all_converged;
    Ok(best)
}

/// Communicating-class structure of a stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStructure {
    /// Closed (recurrent) classes, each sorted, ordered by smallest member.
    pub recurrent: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
}

pub fn class_structure(kernel: &[Vec<f64>]) -> ClassStructure {
    let s = kernel.len();
    // reach[i][j]: j reachable from i in zero or more steps
    let mut reach = vec![vec![false; s]; s];
    for (start, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![start];
        row[start] = true;
        while let Some(i) = stack.pop() {
            for (j, &p) in kernel[i].iter().enumerate() {
                if p > 0.0 && !row[j] {
                    row[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    let mut recurrent = Vec::new();
    let mut transient = Vec::new();
    let mut seen = vec![false; s];
    for i in 0..s {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..s).filter(|&j| reach[i][j] && reach[j][i]).collect();
        let closed = (0..s).all(|j| !reach[i][j] || reach[j][i]);
        for &j in &class {
            seen[j] = true;
        }
        if closed {
            recurrent.push(class);
        } else {
            transient.extend(class);
        }
    }
    transient.sort_unstable();
    ClassStructure { recurrent, transient }
}

/// Cesàro limit `Q = lim (1/N) Σ_{k<N} Pᵏ` of a stochastic matrix.
pub fn cesaro_limit(kernel: &[Vec<f64>]) -> Result<Matrix> {
    let s = kernel.len();
    for row in kernel {
        if row.len() != s {
            return Err(Error::DimensionMismatch { what: "kernel columns", expected: s, found: row.len() });
        }
    }
    let classes = class_structure(kernel);
    let mut q = vec![vec![0.0; s]; s];
    let mut invariant = Vec::with_capacity(classes.recurrent.len());
    for class in &classes.recurrent {
        let n = class.len();
        // Rows k of the system: Σ_i π_i (P_{ik} - δ_ik) = 0, last row replaced by Σ π = 1.
        let mut a = vec![vec![0.0; n]; n];
        for (r, &k) in class.iter().enumerate() {
            for (c, &i) in class.iter().enumerate() {
                a[r][c] = kernel[i][k] - if i == k { 1.0 } else { 0.0 };
            }
        }
        a[n - 1] = vec![1.0; n];
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let pi = linalg::solve(a, b).ok_or_else(|| Error::SingularSystem { states: class.clone() })?;
        for &i in class {
            for (c, &j) in class.iter().enumerate() {
                q[i][j] = pi[c];
            }
        }
        invariant.push(pi);
    }
    let t = &classes.transient;
    if !t.is_empty() {
        let m = t.len();
        let mut a = vec![vec![0.0; m]; m];
        for (r, &i) in t.iter().enumerate() {
            for (c, &j) in t.iter().enumerate() {
                a[r][c] = if i == j { 1.0 } else { 0.0 } - kernel[i][j];
            }
        }
        for (class, pi) in classes.recurrent.iter().zip(&invariant) {
            let b: Vec<f64> = t.iter().map(|&i| class.iter().map(|&j| kernel[i][j]).sum()).collect();
            let absorb = linalg::solve(a.clone(), b).ok_or_else(|| Error::SingularSystem { states: t.clone() })?;
            for (r, &i) in t.iter().enumerate() {
                for (c, &j) in class.iter().enumerate() {
                    q[i][j] += absorb[r] * pi[c];
                }
            }
        }
    }
    Ok(q)
}

/// Per-state ergodic payoffs `Φ_i(q, v)` and their maximum `Φ̂(q, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector {
    pub phi: Vec<Ext>,
    pub phi_max: Ext,
}

/// Averaged reward `c̃_v(i, q) = Σ_u v(u|i) c̃(i, q, u)`.
pub fn tilde_cost_policy(model: &MdpModel, i: usize, qrow: &[f64], v: &StationaryPolicy) -> Ext {
    v.row(i)
        .iter()
        .enumerate()
        .map(|(u, &w)| tilde_cost_unchecked(model, i, qrow, u).scale(w))
        .sum()
}

/// `Φ = Q c̃_v` with `Q` the Cesàro limit of `q`.
pub fn game_payoff(model: &MdpModel, q: &KernelMatrix, v: &StationaryPolicy) -> Result<PayoffVector> {
    let s = model.num_states();
    if v.num_states() != s || v.num_actions() != model.num_actions() {
        return Err(Error::DimensionMismatch { what: "policy", expected: s, found: v.num_states() });
    }
    let reward: Vec<Ext> = (0..s).map(|i| tilde_cost_policy(model, i, q.row(i), v)).collect();
    let cesaro = cesaro_limit(q.rows())?;
    let phi: Vec<Ext> = cesaro
        .iter()
        .map(|row| row.iter().zip(&reward).map(|(&w, &r)| r.scale(w)).sum())
        .collect();
    let phi_max = phi.iter().copied().fold(Ext::NegInf, Ext::max);
    Ok(PayoffVector { phi, phi_max })
}

/// Maximizer of `q ↦ Σ_j q(j) V_j - D(q ‖ p)` over distributions on the
/// support of `p`: `q(j) ∝ p(j) e^{V_j}`. Returns the maximizer and the
/// maximum `log Σ_j p(j) e^{V_j}`.
pub fn gibbs_maximizer(prow: &[f64], values: &[f64]) -> (Vec<f64>, f64) {
    let lse = log_sum_exp(prow.iter().zip(values).map(|(&p, &v)| if p > 0.0 { ln(p) + v } else { f64::NEG_INFINITY }));
    let q = prow
        .iter()
        .zip(values)
        .map(|(&p, &v)| if p > 0.0 { exp(ln(p) + v - lse) } else { 0.0 })
        .collect();
    (q, lse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::two_state_example;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]) - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn tilde_cost_examples() {
        let m = two_state_example(0.8).unwrap();
        assert_eq!(tilde_cost(&m, 1, &[0.2, 0.8], 0).unwrap(), Ext::Finite(1.0));
        let c = tilde_cost(&m, 1, &[0.0, 1.0], 0).unwrap().finite().unwrap();
        assert!((c - (1.0 + ln(0.8))).abs() < 1e-15);
        assert!((c - 0.776_856).abs() < 1e-6);
        assert!(matches!(tilde_cost(&m, 0, &[0.5, 0.5], 0), Err(Error::SupportViolation { .. })));

        let two = MdpModel::unlabeled(
            vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![vec![0.0, 1.0], vec![0.5, 0.5]]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(tilde_cost(&two, 0, &[0.5, 0.5], 0).unwrap(), Ext::NegInf);
    }

    #[test]
    fn zero_cost_rates_vanish() {
        let m = MdpModel::unlabeled(
            vec![vec![vec![0.2, 0.8, 0.0], vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0]]],
            vec![vec![0.0]; 3],
        )
        .unwrap();
        let g = growth_rate(&m, &StationaryPolicy::uniform(3, 1)).unwrap();
        assert!(g.converged);
        for l in g.lambda {
            assert!(l.abs() < 1e-12);
        }
    }

    #[test]
    fn single_state_rate_is_its_cost() {
        let m = MdpModel::uncontrolled(vec![vec![1.0]], vec![0.37]).unwrap();
        let g = growth_rate(&m, &StationaryPolicy::uniform(1, 1)).unwrap();
        assert!((g.lambda[0] - 0.37).abs() < 1e-12);
        assert_eq!(g.lambda_max, g.lambda[0]);
    }

    #[test]
    fn example_rates() {
        let m = two_state_example(0.8).unwrap();
        let g = growth_rate(&m, &StationaryPolicy::uniform(2, 1)).unwrap();
        assert!(g.converged);
        assert!(g.lambda[0].abs() < 1e-10);
        assert!((g.lambda[1] - (1.0 + ln(0.8))).abs() < 1e-9);
    }

    #[test]
    fn period_two_chain_converges() {
        let m = MdpModel::uncontrolled(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 3.0]).unwrap();
        let g = growth_rate(&m, &StationaryPolicy::uniform(2, 1)).unwrap();
        assert!(g.converged);
        assert!((g.lambda[0] - 2.0).abs() < 1e-10);
        assert!((g.lambda[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn cesaro_examples() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(cesaro_limit(&id).unwrap(), id);

        let (a, b) = (0.3, 0.6);
        let q = cesaro_limit(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        for row in &q {
            assert!((row[0] - b / (a + b)).abs() < 1e-14);
            assert!((row[1] - a / (a + b)).abs() < 1e-14);
        }

        let q = cesaro_limit(&[vec![1.0, 0.0], vec![0.2, 0.8]]).unwrap();
        assert!((q[0][0] - 1.0).abs() < 1e-14 && q[0][1] == 0.0);
        assert!((q[1][0] - 1.0).abs() < 1e-14 && q[1][1] == 0.0);
    }

    #[test]
    fn payoff_on_example() {
        let m = two_state_example(0.8).unwrap();
        let q = KernelMatrix::new(&m, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let pay = game_payoff(&m, &q, &StationaryPolicy::uniform(2, 1)).unwrap();
        assert_eq!(pay.phi[0], Ext::Finite(0.0));
        assert!((pay.phi[1].to_f64() - (1.0 + ln(0.8))).abs() < 1e-14);
        assert_eq!(pay.phi_max, pay.phi[1]);
    }

    #[test]
    fn payoff_absorbing_target() {
        let m = MdpModel::uncontrolled(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 0.0, 1.0]],
            vec![2.0, 1.0, 0.0],
        )
        .unwrap();
        let q = KernelMatrix::new(&m, m.kernel()[0].clone()).unwrap();
        let pay = game_payoff(&m, &q, &StationaryPolicy::uniform(3, 1)).unwrap();
        for phi in pay.phi {
            assert_eq!(phi, Ext::Finite(0.0));
        }
    }

    #[test]
    fn neg_inf_reward_in_recurrent_class() {
        let m = MdpModel::unlabeled(
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.5, 0.5], vec![0.0, 1.0]]],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
        )
        .unwrap();
        // q moves 0 -> 1; under action 0 at state 0 that is impossible.
        let q = KernelMatrix::new(&m, vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let v = PurePolicy::new(vec![0, 0], 2).unwrap().to_stationary(2);
        let pay = game_payoff(&m, &q, &v).unwrap();
        // state 0 is transient, so its -inf reward carries no Cesàro weight
        assert_eq!(pay.phi[0], Ext::Finite(1.0));
        let q = KernelMatrix::new(&m, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let v = PurePolicy::new(vec![0, 0], 2).unwrap().to_stationary(2);
        assert_eq!(game_payoff(&m, &q, &v).unwrap().phi[0], Ext::Finite(0.0));
    }

    #[test]
    fn gibbs_maximizer_attains_log_sum_exp() {
        let p = [0.2, 0.0, 0.8];
        let v = [1.0, 5.0, -0.5];
        let (q, val) = gibbs_maximizer(&p, &v);
        assert_eq!(q[1], 0.0);
        let obj = q.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() - kl_divergence(&q, &p);
        assert!((obj - val).abs() < 1e-12);
    }
}
