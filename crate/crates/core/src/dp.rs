//! Nested dynamic-programming equations for a candidate `(Φ*, V)`.
//!
//! The outer equation says each `Φ*ᵢ` is the largest value reachable in one
//! step. Grouping states by value gives levels `𝓘₁ … 𝓘ₘ`; the inner
//! equation then only sees the kernel restricted to the current level,
//! `p̂`, and its `q`-maximum is a log-sum-exp (Gibbs). Exponentiating
//! (`Λ = e^{Φ*}`, `Ψ = e^V`) turns the inner equation into a multiplicative
//! one whose minimizers define a twisted averaging kernel.
//!
//! The module also carries the closed-form two-state example and the scan
//! showing that its multiplicative Poisson inequality has no solution.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln, log_sum_exp};
use crate::model::MdpModel;

/// States grouped by value, levels in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub levels: Vec<Vec<usize>>,
    /// Representative (mean) value of each level, strictly increasing.
    pub values: Vec<f64>,
    /// `level_of[i]` is the index of the level containing state `i`.
    pub level_of: Vec<usize>,
}

impl Partition {
    pub fn same_level(&self, i: usize, j: usize) -> bool {
        self.level_of[i] == self.level_of[j]
    }
}

/// Single-linkage grouping: consecutive sorted values closer than
/// `level_tol` share a level. A level whose total spread exceeds
/// `level_tol` could be cut in more than one way and is rejected.
pub fn build_partition(phi: &[f64], level_tol: f64) -> Result<Partition> {
    if phi.is_empty() {
        return Err(Error::EmptyModel);
    }
    if let Some(i) = phi.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("value of state {i} is not finite")));
    }
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[a].total_cmp(&phi[b]).then(a.cmp(&b)));
    let mut levels: Vec<Vec<usize>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        if phi[w[1]] - phi[w[0]] > level_tol {
            levels.push(Vec::new());
        }
        levels.last_mut().unwrap().push(w[1]);
    }
    let mut values = Vec::with_capacity(levels.len());
    let mut level_of = vec![0; phi.len()];
    for (l, level) in levels.iter_mut().enumerate() {
        let lo = phi[level[0]];
        let hi = phi[*level.last().unwrap()];
        if hi - lo > level_tol {
            return Err(Error::AmbiguousPartition { spread: hi - lo, level_tol });
        }
        values.push(level.iter().map(|&i| phi[i]).sum::<f64>() / level.len() as f64);
        level.sort_unstable();
        for &i in level.iter() {
            level_of[i] = l;
        }
    }
    Ok(Partition { levels, values, level_of })
}

/// `p̂[u][i][j] = p(j|i,u)` when `i` and `j` share a level, else 0.
pub fn hat_kernel(model: &MdpModel, partition: &Partition) -> Result<Vec<Vec<Vec<f64>>>> {
    let s = model.num_states();
    if partition.level_of.len() != s {
        return Err(Error::DimensionMismatch { what: "partition", expected: s, found: partition.level_of.len() });
    }
    let hat: Vec<Vec<Vec<f64>>> = model
        .kernel()
        .iter()
        .map(|rows| {
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter().enumerate().map(|(j, &p)| if partition.same_level(i, j) { p } else { 0.0 }).collect()
                })
                .collect()
        })
        .collect();
    for i in 0..s {
        if hat.iter().all(|rows| rows[i].iter().all(|&p| p == 0.0)) {
            return Err(Error::LevelEscape { state: i });
        }
    }
    Ok(hat)
}

/// Settings for [`certify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    pub level_tol: f64,
    /// Relative tolerance defining the minimizer sets `B*ᵢ`.
    pub argmin_tol: f64,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig { level_tol: 1e-6, argmin_tol: 1e-9 }
    }
}

/// Residuals of the additive equations.
#[derive(Debug, Clone, PartialEq)]
pub struct DpResiduals {
    /// `|Φ*ᵢ − max_{j ∈ supp} Φ*ⱼ|`.
    pub dp1: Vec<f64>,
    /// `|Φ*ᵢ + Vᵢ − minᵤ max_{q ∈ Bᵢ} [c̃(i,q,u) + qV]|`; infinite when some
    /// action cannot stay in the level.
    pub dp2: Vec<f64>,
}

impl DpResiduals {
    pub fn max(&self) -> f64 {
        self.dp1.iter().chain(&self.dp2).copied().fold(0.0, f64::max)
    }
}

/// Residuals of the exponentiated equations, all relative.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedResiduals {
    /// `|max_{j ∈ supp} Λⱼ / Λᵢ − 1|`.
    pub dp1: Vec<f64>,
    /// `|minᵤ Σⱼ p̂(j|i,u) e^{c(i,u)} Ψⱼ / (ΛᵢΨᵢ) − 1|`.
    pub dp2: Vec<f64>,
    /// `|min_{u ∈ B*ᵢ} Σⱼ w(j|i,u) Λⱼ / Λᵢ − 1|` with the twisted weights `w`.
    pub dp3: Vec<f64>,
    /// `Λ* = maxᵢ Λᵢ`.
    pub lambda_star: f64,
    pub b_star: Vec<Vec<usize>>,
}

impl TwistedResiduals {
    pub fn max(&self) -> f64 {
        self.dp1.iter().chain(&self.dp2).chain(&self.dp3).copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpCertificate {
    pub phi_star: Vec<f64>,
    pub v: Vec<f64>,
    pub partition: Partition,
    pub hat_kernel: Vec<Vec<Vec<f64>>>,
    pub residuals: DpResiduals,
    /// `Λ = e^{Φ*}`.
    pub lambda: Vec<f64>,
    /// `Ψ = e^V`.
    pub psi: Vec<f64>,
    pub twisted: TwistedResiduals,
}

impl DpCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residuals.max()
    }

    /// `V` shifted so that its minimum over each level is 0.
    pub fn normalized_v(&self) -> Vec<f64> {
        let mut v = self.v.clone();
        for level in &self.partition.levels {
            let m = level.iter().map(|&i| self.v[i]).fold(f64::INFINITY, f64::min);
            for &i in level {
                v[i] -= m;
            }
        }
        v
    }
}

fn check_inputs(model: &MdpModel, phi: &[f64], v: &[f64]) -> Result<()> {
    let s = model.num_states();
    if phi.len() != s {
        return Err(Error::DimensionMismatch { what: "value vector", expected: s, found: phi.len() });
    }
    if v.len() != s {
        return Err(Error::DimensionMismatch { what: "potential vector", expected: s, found: v.len() });
    }
    if phi.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("values and potentials must be finite".into()));
    }
    Ok(())
}

/// Inner value `max_{q ∈ Bᵢ} [c̃(i,q,u) + qV]` for each action, by the
/// Gibbs formula on the level-restricted kernel.
fn inner_values(model: &MdpModel, hat: &[Vec<Vec<f64>>], v: &[f64], i: usize) -> Vec<f64> {
    (0..model.num_actions())
        .map(|u| {
            let row = &hat[u][i];
            model.cost(i, u) + log_sum_exp(row.iter().zip(v).filter(|(&p, _)| p > 0.0).map(|(&p, &x)| ln(p) + x))
        })
        .collect()
}

fn dp1_gap(model: &MdpModel, values: &[f64], i: usize) -> f64 {
    model.union_support_unchecked(i).iter().map(|&j| values[j]).fold(f64::NEG_INFINITY, f64::max)
}

/// Residuals of both additive equations.
pub fn check_dp(model: &MdpModel, phi: &[f64], v: &[f64], level_tol: f64) -> Result<DpResiduals> {
    check_inputs(model, phi, v)?;
    let partition = build_partition(phi, level_tol)?;
    let hat = hat_kernel(model, &partition)?;
    Ok(dp_residuals(model, phi, v, &hat))
}

fn dp_residuals(model: &MdpModel, phi: &[f64], v: &[f64], hat: &[Vec<Vec<f64>>]) -> DpResiduals {
    let s = model.num_states();
    let dp1 = (0..s).map(|i| (phi[i] - dp1_gap(model, phi, i)).abs()).collect();
    let dp2 = (0..s)
        .map(|i| {
            let best = inner_values(model, hat, v, i).into_iter().fold(f64::INFINITY, f64::min);
            if best == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                (phi[i] + v[i] - best).abs()
            }
        })
        .collect();
    DpResiduals { dp1, dp2 }
}

/// Build the partition, restricted kernel and all residuals for `(Φ*, V)`.
pub fn certify(model: &MdpModel, phi: &[f64], v: &[f64], cfg: &DpConfig) -> Result<DpCertificate> {
    check_inputs(model, phi, v)?;
    let partition = build_partition(phi, cfg.level_tol)?;
    let hat = hat_kernel(model, &partition)?;
    let residuals = dp_residuals(model, phi, v, &hat);
    let mut cert = DpCertificate {
        phi_star: phi.to_vec(),
        v: v.to_vec(),
        partition,
        hat_kernel: hat,
        residuals,
        lambda: phi.iter().map(|&x| exp(x)).collect(),
        psi: v.iter().map(|&x| exp(x)).collect(),
        twisted: TwistedResiduals { dp1: vec![], dp2: vec![], dp3: vec![], lambda_star: 0.0, b_star: vec![] },
    };
    cert.twisted = check_twisted(model, &cert, cfg.argmin_tol)?;
    Ok(cert)
}

/// `Σⱼ p̂(j|i,u) e^{c(i,u)} Ψⱼ` with `Ψ` rescaled by `e^{-shift}`.
fn twisted_mass(model: &MdpModel, cert: &DpCertificate, i: usize, u: usize, shift: f64) -> f64 {
    let c = model.cost(i, u);
    cert.hat_kernel[u][i].iter().zip(&cert.v).map(|(&p, &x)| if p > 0.0 { p * exp(c + x - shift) } else { 0.0 }).sum()
}

/// Twisted averaging weights `p̂(j|i,u) e^{c} Ψⱼ / Σₖ p̂(k|i,u) e^{c} Ψₖ`, or
/// `None` when the denominator vanishes.
pub fn twisted_weights(model: &MdpModel, cert: &DpCertificate, i: usize, u: usize) -> Option<Vec<f64>> {
    let shift = cert.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total = twisted_mass(model, cert, i, u, shift);
    if total <= 0.0 {
        return None;
    }
    let c = model.cost(i, u);
    Some(
        cert.hat_kernel[u][i]
            .iter()
            .zip(&cert.v)
            .map(|(&p, &x)| if p > 0.0 { p * exp(c + x - shift) / total } else { 0.0 })
            .collect(),
    )
}

/// Evaluate the exponentiated equations. `Ψ` enters only through ratios,
/// so it is rescaled by `e^{-max V}` to keep everything in range.
pub fn check_twisted(model: &MdpModel, cert: &DpCertificate, argmin_tol: f64) -> Result<TwistedResiduals> {
    let s = model.num_states();
    let a = model.num_actions();
    let shift = cert.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda_star = cert.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut dp1 = Vec::with_capacity(s);
    let mut dp2 = Vec::with_capacity(s);
    let mut dp3 = Vec::with_capacity(s);
    let mut b_star = Vec::with_capacity(s);
    for i in 0..s {
        dp1.push((dp1_gap(model, &cert.lambda, i) / cert.lambda[i] - 1.0).abs());

        let masses: Vec<f64> = (0..a).map(|u| twisted_mass(model, cert, i, u, shift)).collect();
        let best = masses.iter().copied().fold(f64::INFINITY, f64::min);
        let lhs = cert.lambda[i] * exp(cert.v[i] - shift);
        dp2.push((best / lhs - 1.0).abs());

        let set: Vec<usize> = (0..a).filter(|&u| masses[u] <= best * (1.0 + argmin_tol)).collect();
        let mut avg = f64::INFINITY;
        for &u in &set {
            let w = twisted_weights(model, cert, i, u).ok_or(Error::LevelEscape { state: i })?;
            avg = avg.min(w.iter().zip(&cert.lambda).map(|(p, l)| p * l).sum());
        }
        dp3.push((avg / cert.lambda[i] - 1.0).abs());
        b_star.push(set);
    }
    Ok(TwistedResiduals { dp1, dp2, dp3, lambda_star, b_star })
}

/// Closed-form solution of the two-state example.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticExample {
    pub rho: f64,
    pub phi_star: [f64; 2],
    /// `q*(2|2)`.
    pub q22: f64,
    pub lambda_bar: f64,
    /// A potential solving the inner equation (`V₁ = 0`).
    pub v: [f64; 2],
    /// `log ρ > −1`: the escape time has no exponential moment.
    pub supercritical: bool,
}

/// `q ↦ c̃(2,q) − (1−q)(V₂ − V₁)` on the row `(1−q, q)`: the inner objective at
/// state 2 once `Φ*₂ = 0`. Concave, with maximum 0 at the right `V₂`.
pub fn example_objective(rho: f64, v2: f64, q: f64) -> f64 {
    let xlogx = |x: f64, r: f64| if x > 0.0 { x * ln(x / r) } else { 0.0 };
    1.0 - xlogx(q, rho) - xlogx(1.0 - q, 1.0 - rho) - (1.0 - q) * v2
}

fn example_slope(rho: f64, v2: f64, q: f64) -> f64 {
    ln((1.0 - q) / (1.0 - rho)) - ln(q / rho) + v2
}

pub fn analytic_example(rho: f64) -> Result<AnalyticExample> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("rho = {rho} is not in (0,1)")));
    }
    let log_rho = ln(rho);
    if log_rho == -1.0 {
        return Err(Error::InvalidParameter("rho = 1/e is the excluded boundary case".into()));
    }
    if log_rho > -1.0 {
        return Ok(AnalyticExample {
            rho,
            phi_star: [0.0, 1.0 + log_rho],
            q22: 1.0,
            lambda_bar: 1.0 + log_rho,
            v: [0.0, 0.0],
            supercritical: true,
        });
    }
    // Single level {1, 2}; the inner equation at state 2 with V₁ = 0 reads
    // e^{V₂} = e (ρ e^{V₂} + 1 − ρ).
    let v2 = ln(core::f64::consts::E * (1.0 - rho) / (1.0 - core::f64::consts::E * rho));
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    if !(example_slope(rho, v2, lo) > 0.0 && example_slope(rho, v2, hi) < 0.0) {
        return Err(Error::NumericalBreakdown("bisection bracket does not straddle the optimum".into()));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if example_slope(rho, v2, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AnalyticExample {
        rho,
        phi_star: [0.0, 0.0],
        q22: 0.5 * (lo + hi),
        lambda_bar: 0.0,
        v: [0.0, v2],
        supercritical: false,
    })
}

/// Scan of the multiplicative Poisson inequality
/// `e ρ e^{h₂} ≥ e (ρ e^{h₂} + (1−ρ) e^{h₁})` over a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonReport {
    pub pairs_checked: usize,
    pub satisfying: usize,
    /// The inequality reduces to `0 ≥ e (1−ρ) e^{h₁}`, false for every `h₁`.
    pub analytic_reduction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec { lo: -20.0, hi: 20.0, step: 0.1 }
    }
}

/// Error-free sum: `a + b == s + e` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

pub fn poisson_insolvability(rho: f64, scan: &ScanSpec) -> Result<PoissonReport> {
    if !(rho > 0.0 && rho < 1.0) || ln(rho) <= -1.0 {
        return Err(Error::InvalidParameter(alloc::format!("rho = {rho} must satisfy log rho > -1")));
    }
    if !(scan.step > 0.0 && scan.hi >= scan.lo) {
        return Err(Error::InvalidParameter("scan needs step > 0 and hi >= lo".into()));
    }
    let e = core::f64::consts::E;
    let n = libm::floor((scan.hi - scan.lo) / scan.step + 1e-9) as usize + 1;
    let mut satisfying = 0;
    for a in 0..n {
        let h1 = scan.lo + a as f64 * scan.step;
        for b in 0..n {
            let h2 = scan.lo + b as f64 * scan.step;
            let lhs = e * rho * exp(h2);
            // Right side computed exactly as lhs + tail, so rounding of the
            // sum cannot make the sides compare equal.
            let tail = e * (1.0 - rho) * exp(h1);
            let (sum, err) = two_sum(lhs, tail);
            if lhs > sum || (lhs == sum && err <= 0.0) {
                satisfying += 1;
            }
        }
    }
    Ok(PoissonReport { pairs_checked: n * n, satisfying, analytic_reduction: e * (1.0 - rho) > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::two_state_example;

    #[test]
    fn partition_examples() {
        let p = build_partition(&[0.0, 0.7768], 1e-6).unwrap();
        assert_eq!(p.levels, vec![vec![0], vec![1]]);
        let p = build_partition(&[0.3, 0.3, 0.3], 1e-6).unwrap();
        assert_eq!(p.levels, vec![vec![0, 1, 2]]);
        let p = build_partition(&[0.1, 0.1 + 5e-7, 0.9], 1e-6).unwrap();
        assert_eq!(p.levels, vec![vec![0, 1], vec![2]]);
        assert_eq!(p.level_of, vec![0, 0, 1]);
        let chain = [0.0, 8e-7, 1.6e-6];
        assert!(matches!(build_partition(&chain, 1e-6), Err(Error::AmbiguousPartition { .. })));
    }

    #[test]
    fn hat_kernel_of_example() {
        let m = two_state_example(0.8).unwrap();
        let p = build_partition(&[0.0, 0.7768], 1e-6).unwrap();
        let h = hat_kernel(&m, &p).unwrap();
        assert_eq!(h[0], vec![vec![1.0, 0.0], vec![0.0, 0.8]]);
        let one = build_partition(&[0.0, 0.0], 1e-6).unwrap();
        assert_eq!(hat_kernel(&m, &one).unwrap(), m.kernel().to_vec());
    }

    #[test]
    fn escape_is_flagged() {
        let m = MdpModel::uncontrolled(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap();
        let p = build_partition(&[0.0, 1.0], 1e-6).unwrap();
        assert_eq!(hat_kernel(&m, &p), Err(Error::LevelEscape { state: 0 }));
    }

    #[test]
    fn example_certifies() {
        let rho = 0.8;
        let m = two_state_example(rho).unwrap();
        let phi = [0.0, 1.0 + ln(rho)];
        for v in [[0.0, 0.0], [3.0, -2.0]] {
            let cert = certify(&m, &phi, &v, &DpConfig::default()).unwrap();
            assert!(cert.max_residual() < 1e-12);
            assert!(cert.twisted.max() < 1e-12);
            assert!((cert.twisted.lambda_star - exp(1.0 + ln(rho))).abs() < 1e-12);
        }
        let bumped = [0.0, 1.0 + ln(rho) + 0.1];
        let r = check_dp(&m, &bumped, &[0.0, 0.0], 1e-6).unwrap();
        assert!(r.max() >= 0.09);
    }

    #[test]
    fn single_state_reduces_to_min_cost() {
        let m = MdpModel::unlabeled(vec![vec![vec![1.0]], vec![vec![1.0]]], vec![vec![0.7, 0.2]]).unwrap();
        let r = check_dp(&m, &[0.2], &[5.0], 1e-6).unwrap();
        assert!(r.max() < 1e-15);
    }

    #[test]
    fn subcritical_example() {
        let rho = exp(-2.0);
        let ex = analytic_example(rho).unwrap();
        assert!(!ex.supercritical);
        assert!((ex.q22 - rho * core::f64::consts::E).abs() < 1e-9);
        assert!(example_objective(rho, ex.v[1], ex.q22).abs() < 1e-12);
        let m = two_state_example(rho).unwrap();
        let cert = certify(&m, &ex.phi_star, &ex.v, &DpConfig::default()).unwrap();
        assert!(cert.max_residual() < 1e-12);
    }

    #[test]
    fn example_rejects_bad_rho() {
        assert!(analytic_example(1.5).is_err());
        assert!(analytic_example(0.0).is_err());
        assert!(poisson_insolvability(0.2, &ScanSpec::default()).is_err());
    }

    #[test]
    fn poisson_scan_finds_nothing() {
        for rho in [0.8, 0.5] {
            let r = poisson_insolvability(rho, &ScanSpec::default()).unwrap();
            assert_eq!(r.pairs_checked, 401 * 401);
            assert_eq!(r.satisfying, 0);
            assert!(r.analytic_reduction);
        }
    }

    #[test]
    fn two_sum_is_exact() {
        let (s, e) = two_sum(1.0, 1e-30);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-30);
    }
}
