//! The single-controller ergodic game as a pair of linear programs.
//!
//! The primal program has variables `V ∈ ℝˢ` (free), `β ∈ ℝˢ` (free) and a
//! randomized minimizer `yᵢ ∈ 𝒫(𝒰)`; for every state `i` and kernel row `q`
//! offered to the maximizer it carries
//!
//! ```text
//! βᵢ ≥ Σⱼ q(j) βⱼ
//! Vᵢ ≥ Σᵤ c̃(i,q,u) yᵢ(u) − βᵢ + Σⱼ q(j) Vⱼ
//! ```
//!
//! and minimizes `Σ βᵢ`. Its dual has occupation weights `μ(i,q)`, `ν(i,q)`
//! and `w ∈ ℝˢ`. The dual has `2s + s|𝒰|` rows and two columns per kernel
//! row, so it is the one handed to the simplex solver; `(V, β, y)` are read
//! off its multipliers.
//!
//! Rewards of `-∞` (kernel rows not absolutely continuous with respect to
//! `p(·|i,u)`) enter the programs as a large negative sentinel.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::grid::{build_grid, GridSpec};
use crate::lp::{self, LinearProgram, LpSolution, LpStatus, Relation, Sense, SolverOptions};
use crate::math::{exp, ln};
use crate::model::{KernelMatrix, Matrix, MdpModel, PurePolicy, StationaryPolicy};
use crate::sample::random_row;
use crate::oracle::tilde_cost_unchecked;

/// Kernel rows offered to the maximizer, per state, each over the full
/// state space.
pub type RowSet = Vec<Vec<Vec<f64>>>;

pub fn grid_rows(grid: &GridSpec) -> RowSet {
    grid.rows.iter().map(|rs| rs.iter().map(|r| r.probs.clone()).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    /// LP coefficient standing in for a `-∞` reward.
    pub sentinel: f64,
    /// Below this total weight the `μ` (resp. `ν`) mass of a state counts
    /// as zero.
    pub mass_tol: f64,
    /// Policy weights below this are outside the support of `y`.
    pub support_tol: f64,
    pub lp: SolverOptions,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig { sentinel: -1e6, mass_tol: 1e-10, support_tol: 1e-9, lp: SolverOptions::default() }
    }
}

/// How the maximizer's row at a state was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSource {
    /// `μ`-weighted mixture of kernel rows.
    Mu,
    /// The state carries no `μ` mass; the row attaining the least feasible
    /// `Vᵢ`.
    Tight,
    /// `ν`-weighted mixture, used when no attaining row keeps `β` harmonic.
    Nu,
    /// Both masses vanished; nearest row to `p_{v*}(·|i)`.
    Fallback,
}

/// Output of one game LP.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    /// Grid resolution, `None` for constraint-generation solves.
    pub resolution: Option<u32>,
    /// `β`, the per-state game value.
    pub value: Vec<f64>,
    /// `V`.
    pub potentials: Vec<f64>,
    /// `y`, the randomized minimizer read off the LP.
    pub minimizer: StationaryPolicy,
    /// Purified minimizer `v*`.
    pub pure_minimizer: PurePolicy,
    /// `μ(i, ·)` and `ν(i, ·)`, aligned with `rows[i]`.
    pub dual_mu: Vec<Vec<f64>>,
    pub dual_nu: Vec<Vec<f64>>,
    pub dual_w: Vec<f64>,
    /// `q*`, assembled from the dual weights.
    pub maximizer: KernelMatrix,
    pub row_source: Vec<RowSource>,
    /// Kernel rows the programs were built over.
    pub rows: RowSet,
    pub sum_beta: f64,
    pub sum_w: f64,
    /// Largest violation of the primal constraints at `(V, β, y)`.
    pub primal_violation: f64,
    /// Largest violation of the dual constraints at `(μ, ν, w)`.
    pub dual_violation: f64,
    pub lp_iterations: usize,
}

impl GameSolution {
    /// `Φ̂* = maxᵢ βᵢ`.
    pub fn value_max(&self) -> f64 {
        self.value.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of primal inequality constraints (two per kernel row).
    pub fn constraint_count(&self) -> usize {
        2 * self.rows.iter().map(Vec::len).sum::<usize>()
    }

    /// `‖β − q* β‖∞`.
    pub fn dual_identity_residual(&self) -> f64 {
        self.maximizer
            .rows()
            .iter()
            .zip(&self.value)
            .map(|(row, &b)| (b - row.iter().zip(&self.value).map(|(q, v)| q * v).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }
}

fn check_rows(model: &MdpModel, rows: &RowSet) -> Result<()> {
    let s = model.num_states();
    if rows.len() != s {
        return Err(Error::DimensionMismatch { what: "kernel row sets", expected: s, found: rows.len() });
    }
    for (i, rs) in rows.iter().enumerate() {
        if rs.is_empty() {
            return Err(Error::DimensionMismatch { what: "kernel rows at a state", expected: 1, found: 0 });
        }
        for r in rs {
            if r.len() != s {
                return Err(Error::DimensionMismatch { what: "kernel row length", expected: s, found: r.len() });
            }
            crate::model::check_support(model, i, r)?;
        }
    }
    Ok(())
}

/// LP coefficient `c̃(i,q,u)` with `-∞` replaced by the sentinel.
fn reward_coeffs(model: &MdpModel, rows: &RowSet, sentinel: f64) -> Vec<Vec<Vec<f64>>> {
    rows.iter()
        .enumerate()
        .map(|(i, rs)| {
            rs.iter()
                .map(|q| (0..model.num_actions()).map(|u| tilde_cost_unchecked(model, i, q, u).or_sentinel(sentinel)).collect())
                .collect()
        })
        .collect()
}

/// Column and row indices of the primal program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimalLayout {
    pub num_states: usize,
    pub num_actions: usize,
}

impl PrimalLayout {
    pub fn v(&self, i: usize) -> usize {
        i
    }
    pub fn beta(&self, i: usize) -> usize {
        self.num_states + i
    }
    pub fn y(&self, i: usize, u: usize) -> usize {
        2 * self.num_states + i * self.num_actions + u
    }
    /// Simplex row `Σᵤ yᵢ(u) = 1`.
    pub fn simplex_row(&self, i: usize) -> usize {
        i
    }
}

/// Column and row indices of the dual program. Kernel rows are numbered
/// globally in state order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualLayout {
    pub num_states: usize,
    pub num_actions: usize,
    /// First global row number of each state.
    pub offsets: Vec<usize>,
    pub total_rows: usize,
}

impl DualLayout {
    fn new(model: &MdpModel, rows: &RowSet) -> Self {
        let mut offsets = Vec::with_capacity(rows.len());
        let mut acc = 0;
        for rs in rows {
            offsets.push(acc);
            acc += rs.len();
        }
        DualLayout { num_states: model.num_states(), num_actions: model.num_actions(), offsets, total_rows: acc }
    }
    pub fn mu(&self, i: usize, k: usize) -> usize {
        2 * (self.offsets[i] + k)
    }
    pub fn nu(&self, i: usize, k: usize) -> usize {
        2 * (self.offsets[i] + k) + 1
    }
    pub fn w(&self, i: usize) -> usize {
        2 * self.total_rows + i
    }
    /// Row `Σ (δᵢⱼ − q(j)) μ = 0` (multiplier `Vⱼ`).
    pub fn v_row(&self, j: usize) -> usize {
        j
    }
    /// Row `Σ (δᵢⱼ − q(j)) ν + Σ μ(j,·) = 1` (multiplier `βⱼ`).
    pub fn beta_row(&self, j: usize) -> usize {
        self.num_states + j
    }
    /// Row `Σ_q c̃(i,q,u) μ(i,q) ≥ wᵢ` (multiplier `−yᵢ(u)`).
    pub fn action_row(&self, i: usize, u: usize) -> usize {
        2 * self.num_states + i * self.num_actions + u
    }
}

pub fn build_primal(model: &MdpModel, grid: &GridSpec) -> Result<LinearProgram> {
    build_primal_rows(model, &grid_rows(grid), GameConfig::default().sentinel)
}

pub fn build_dual(model: &MdpModel, grid: &GridSpec) -> Result<LinearProgram> {
    build_dual_rows(model, &grid_rows(grid), GameConfig::default().sentinel)
}

/// Primal program over arbitrary kernel rows. Rows: the `s` simplex
/// equalities first, then for each state and kernel row a `β` inequality
/// followed by a `V` inequality.
pub fn build_primal_rows(model: &MdpModel, rows: &RowSet, sentinel: f64) -> Result<LinearProgram> {
    check_rows(model, rows)?;
    let s = model.num_states();
    let a = model.num_actions();
    let lay = PrimalLayout { num_states: s, num_actions: a };
    let rewards = reward_coeffs(model, rows, sentinel);
    let mut lp = LinearProgram::new(Sense::Minimize);
    for _ in 0..s {
        lp.add_free(0.0);
    }
    for _ in 0..s {
        lp.add_free(1.0);
    }
    for _ in 0..s * a {
        lp.add_nonneg(0.0);
    }
    for i in 0..s {
        let entries: Vec<(usize, f64)> = (0..a).map(|u| (lay.y(i, u), 1.0)).collect();
        lp.add_constraint(&entries, Relation::Eq, 1.0);
    }
    let mut entries = Vec::new();
    for (i, rs) in rows.iter().enumerate() {
        for (k, q) in rs.iter().enumerate() {
            entries.clear();
            entries.push((lay.beta(i), 1.0));
            entries.extend(q.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, &p)| (lay.beta(j), -p)));
            lp.add_constraint(&entries, Relation::Ge, 0.0);

            entries.clear();
            entries.push((lay.v(i), 1.0));
            entries.extend(q.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, &p)| (lay.v(j), -p)));
            entries.push((lay.beta(i), 1.0));
            entries.extend((0..a).map(|u| (lay.y(i, u), -rewards[i][k][u])));
            lp.add_constraint(&entries, Relation::Ge, 0.0);
        }
    }
    Ok(lp)
}

/// Dual program over arbitrary kernel rows, laid out as in [`DualLayout`].
pub fn build_dual_rows(model: &MdpModel, rows: &RowSet, sentinel: f64) -> Result<LinearProgram> {
    check_rows(model, rows)?;
    let lay = DualLayout::new(model, rows);
    Ok(build_dual_with(model, rows, &lay, &reward_coeffs(model, rows, sentinel)))
}

fn build_dual_with(model: &MdpModel, rows: &RowSet, lay: &DualLayout, rewards: &[Vec<Vec<f64>>]) -> LinearProgram {
    let s = model.num_states();
    let a = model.num_actions();
    let mut lp = LinearProgram::new(Sense::Maximize);
    for _ in 0..lay.total_rows {
        lp.add_nonneg(0.0); // μ
        lp.add_nonneg(0.0); // ν
    }
    for _ in 0..s {
        lp.add_free(1.0);
    }
    // Collect the rows column-wise first, then emit them.
    let mut v_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s];
    let mut b_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s];
    let mut a_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s * a];
    for (i, rs) in rows.iter().enumerate() {
        for (k, q) in rs.iter().enumerate() {
            let (mu, nu) = (lay.mu(i, k), lay.nu(i, k));
            for (j, &p) in q.iter().enumerate() {
                let coef = if i == j { 1.0 } else { 0.0 } - p;
                if coef != 0.0 {
                    v_rows[j].push((mu, coef));
                    b_rows[j].push((nu, coef));
                }
            }
            b_rows[i].push((mu, 1.0));
            for u in 0..a {
                a_rows[i * a + u].push((mu, rewards[i][k][u]));
            }
        }
    }
    for r in &v_rows {
        lp.add_constraint(r, Relation::Eq, 0.0);
    }
    for r in &b_rows {
        lp.add_constraint(r, Relation::Eq, 1.0);
    }
    for i in 0..s {
        for u in 0..a {
            let r = &mut a_rows[i * a + u];
            r.push((lay.w(i), -1.0));
            lp.add_constraint(r, Relation::Ge, 0.0);
        }
    }
    lp
}

/// Build and solve the programs at grid resolution `n`.
pub fn solve_game(model: &MdpModel, resolution: u32) -> Result<GameSolution> {
    solve_game_with(model, resolution, &GameConfig::default())
}

pub fn solve_game_with(model: &MdpModel, resolution: u32, cfg: &GameConfig) -> Result<GameSolution> {
    let grid = build_grid(model, resolution)?;
    let mut sol = solve_rows(model, grid_rows(&grid), cfg)?;
    sol.resolution = Some(resolution);
    Ok(sol)
}

/// Solve the game restricted to the given kernel rows.
pub fn solve_rows(model: &MdpModel, rows: RowSet, cfg: &GameConfig) -> Result<GameSolution> {
    check_rows(model, &rows)?;
    let s = model.num_states();
    let a = model.num_actions();
    let lay = DualLayout::new(model, &rows);
    let rewards = reward_coeffs(model, &rows, cfg.sentinel);
    let lp = build_dual_with(model, &rows, &lay, &rewards);
    let sol = lp::solve_with(&lp, &cfg.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::LpStatus { context: "game dual program".into(), status: sol.status.as_str() });
    }
    extract(model, rows, &lay, &rewards, &lp, &sol, cfg, s, a)
}

#[allow(clippy::too_many_arguments)]
fn extract(
    model: &MdpModel,
    rows: RowSet,
    lay: &DualLayout,
    rewards: &[Vec<Vec<f64>>],
    lp: &LinearProgram,
    sol: &LpSolution,
    cfg: &GameConfig,
    s: usize,
    a: usize,
) -> Result<GameSolution> {
    // `+ 0.0` maps the solver's -0.0 to 0.0.
    let mut potentials: Vec<f64> = (0..s).map(|j| sol.duals[lay.v_row(j)] + 0.0).collect();
    let value: Vec<f64> = (0..s).map(|j| sol.duals[lay.beta_row(j)] + 0.0).collect();
    let mut y_rows: Matrix = Vec::with_capacity(s);
    for i in 0..s {
        let mut row: Vec<f64> = (0..a).map(|u| (-sol.duals[lay.action_row(i, u)]).max(0.0)).collect();
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::NumericalBreakdown("minimizer weights vanished".into()));
        }
        row.iter_mut().for_each(|w| *w /= total);
        y_rows.push(row);
    }
    let minimizer = StationaryPolicy::new(y_rows)?;

    let dual_mu: Vec<Vec<f64>> = (0..s).map(|i| (0..rows[i].len()).map(|k| sol.x[lay.mu(i, k)].max(0.0)).collect()).collect();
    let dual_nu: Vec<Vec<f64>> = (0..s).map(|i| (0..rows[i].len()).map(|k| sol.x[lay.nu(i, k)].max(0.0)).collect()).collect();
    let dual_w: Vec<f64> = (0..s).map(|i| sol.x[lay.w(i)]).collect();

    let idle: Vec<bool> = dual_mu.iter().map(|m| m.iter().sum::<f64>() <= cfg.mass_tol).collect();
    let attaining = tighten(&rows, rewards, &value, &mut potentials, &minimizer, &idle);

    let pure_minimizer = purify(model, &rows, &potentials, &minimizer, cfg)?;

    let (pv, _) = model.apply_policy(&pure_minimizer.to_stationary(a))?;
    let scale = 1.0 + value.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let mut q_rows = Vec::with_capacity(s);
    let mut row_source = Vec::with_capacity(s);
    for i in 0..s {
        let nu_mass: f64 = dual_nu[i].iter().sum();
        if let Some(k) = attaining[i] {
            let qb: f64 = rows[i][k].iter().zip(&value).map(|(q, b)| q * b).sum();
            if (qb - value[i]).abs() <= 1e-9 * scale {
                q_rows.push(rows[i][k].clone());
                row_source.push(RowSource::Tight);
                continue;
            }
        }
        let (weights, source) = if !idle[i] {
            (&dual_mu[i], RowSource::Mu)
        } else if nu_mass > cfg.mass_tol {
            (&dual_nu[i], RowSource::Nu)
        } else {
            let dist = |r: &Vec<f64>| r.iter().zip(&pv[i]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let mut best = 0;
            for k in 1..rows[i].len() {
                if dist(&rows[i][k]) < dist(&rows[i][best]) {
                    best = k;
                }
            }
            q_rows.push(rows[i][best].clone());
            row_source.push(RowSource::Fallback);
            continue;
        };
        let mass: f64 = weights.iter().sum();
        let mut row = vec![0.0; s];
        for (q, &w) in rows[i].iter().zip(weights) {
            if w > 0.0 {
                let alpha = w / mass;
                for (acc, &p) in row.iter_mut().zip(q) {
                    *acc += alpha * p;
                }
            }
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
        q_rows.push(row);
        row_source.push(source);
    }
    let maximizer = KernelMatrix::new(model, q_rows)?;

    let primal_violation = primal_violation(&rows, rewards, &value, &potentials, &minimizer);
    let sum_beta: f64 = value.iter().sum();
    let sum_w: f64 = dual_w.iter().sum();
    Ok(GameSolution {
        resolution: None,
        value,
        potentials,
        minimizer,
        pure_minimizer,
        dual_mu,
        dual_nu,
        dual_w,
        maximizer,
        row_source,
        rows,
        sum_beta,
        sum_w,
        primal_violation,
        dual_violation: lp.primal_residual(&sol.x),
        lp_iterations: sol.iterations,
    })
}

/// On states without `μ` mass the potentials are only bounded below by
/// their constraints. Lower them (Gauss-Seidel, all other entries fixed) to
/// the least feasible values and report the row attaining each one. The
/// objective does not involve `V`, so the result is still optimal; `μ`
/// never charges a row leading into an idle state, so complementary
/// slackness is kept. Leaves `V` untouched if the sweep does not settle.
fn tighten(
    rows: &RowSet,
    rewards: &[Vec<Vec<f64>>],
    beta: &[f64],
    v: &mut [f64],
    y: &StationaryPolicy,
    idle: &[bool],
) -> Vec<Option<usize>> {
    let mut arg = vec![None; rows.len()];
    if !idle.iter().any(|&b| b) {
        return arg;
    }
    let mut w = v.to_vec();
    for _ in 0..1000 {
        let mut change: f64 = 0.0;
        for i in (0..rows.len()).filter(|&i| idle[i]) {
            let mut best = f64::NEG_INFINITY;
            for (k, q) in rows[i].iter().enumerate() {
                let stay = q[i];
                if stay >= 1.0 {
                    continue;
                }
                let r: f64 = y.row(i).iter().zip(&rewards[i][k]).map(|(a, c)| a * c).sum();
                let flow: f64 = q.iter().zip(&w).enumerate().filter(|&(j, _)| j != i).map(|(_, (p, x))| p * x).sum();
                let cand = (r - beta[i] + flow) / (1.0 - stay);
                if cand > best {
                    best = cand;
                    arg[i] = Some(k);
                }
            }
            if best.is_finite() {
                change = change.max((best - w[i]).abs());
                w[i] = best;
            }
        }
        let scale = 1.0 + w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if change <= 1e-13 * scale {
            v.copy_from_slice(&w);
            return arg;
        }
    }
    vec![None; rows.len()]
}

fn primal_violation(rows: &RowSet, rewards: &[Vec<Vec<f64>>], beta: &[f64], v: &[f64], y: &StationaryPolicy) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, rs) in rows.iter().enumerate() {
        for (k, q) in rs.iter().enumerate() {
            let qb: f64 = q.iter().zip(beta).map(|(a, b)| a * b).sum();
            let qv: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
            let r: f64 = y.row(i).iter().zip(&rewards[i][k]).map(|(w, c)| w * c).sum();
            worst = worst.max(qb - beta[i]).max(r - beta[i] + qv - v[i]);
        }
    }
    worst
}

/// Pick, per state, the action in the support of `y` whose worst-case
/// bracket `max_q [c̃(i,q,u) + Σⱼ q(j)Vⱼ]` is smallest; ties go to the
/// lowest action index.
fn purify(model: &MdpModel, rows: &RowSet, v: &[f64], y: &StationaryPolicy, cfg: &GameConfig) -> Result<PurePolicy> {
    let a = model.num_actions();
    let mut choice = Vec::with_capacity(rows.len());
    for (i, rs) in rows.iter().enumerate() {
        let mut best: Option<(usize, Ext)> = None;
        for u in 0..a {
            if y.row(i)[u] <= cfg.support_tol {
                continue;
            }
            let worst = rs
                .iter()
                .map(|q| tilde_cost_unchecked(model, i, q, u) + q.iter().zip(v).map(|(p, x)| p * x).sum::<f64>())
                .fold(Ext::NegInf, Ext::max);
            let better = match best {
                None => true,
                Some((_, b)) => match (worst, b) {
                    (Ext::Finite(w), Ext::Finite(bv)) => w < bv - 1e-12,
                    (w, b) => w < b,
                },
            };
            if better {
                best = Some((u, worst));
            }
        }
        let u = match best {
            Some((u, _)) => u,
            None => (0..a).max_by(|&p, &q| y.row(i)[p].total_cmp(&y.row(i)[q]).then(q.cmp(&p))).unwrap_or(0),
        };
        choice.push(u);
    }
    PurePolicy::new(choice, a)
}

/// Settings for [`solve_sequence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceConfig {
    pub n_start: u32,
    pub n_max: u32,
    pub stop_tol: f64,
    /// Allowed componentwise decrease of `βⁿ` between resolutions. Finer
    /// grids only add constraints to the primal, so `βⁿ` can only grow.
    pub monotone_tol: f64,
    /// Random kernels sampled to check the final pair against the
    /// semi-infinite program.
    pub feasibility_samples: usize,
    pub seed: u64,
    pub game: GameConfig,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            n_start: 2,
            n_max: 8,
            stop_tol: 1e-4,
            monotone_tol: 1e-7,
            feasibility_samples: 200,
            seed: 12345,
            game: GameConfig::default(),
        }
    }
}

/// Diagnostics for one resolution of the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionRecord {
    pub resolution: u32,
    pub value: Vec<f64>,
    pub sum_beta: f64,
    pub sum_w: f64,
    pub dual_identity_residual: f64,
    pub primal_violation: f64,
    pub constraint_count: usize,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `‖βⁿ − βⁿ⁻¹‖∞ < stop_tol`.
    Converged,
    /// Reached `n_max`.
    MaxResolution,
}

/// Check of the final `(β, V, y)` against random kernels from `𝒬`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCheck {
    pub samples: usize,
    pub max_violation: f64,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub records: Vec<ResolutionRecord>,
    pub beta_hat: Vec<f64>,
    /// Largest componentwise decrease `βⁿ⁻¹ᵢ − βⁿᵢ` seen along the sequence
    /// (nonpositive when the sequence is nondecreasing).
    pub max_decrease: f64,
    pub stop: StopReason,
    pub feasibility: FeasibilityCheck,
    pub final_solution: GameSolution,
}

impl ConvergenceReport {
    pub fn value_max(&self) -> f64 {
        self.beta_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn solve_sequence(model: &MdpModel, cfg: &SequenceConfig) -> Result<ConvergenceReport> {
    if cfg.n_start > cfg.n_max {
        return Err(Error::InvalidParameter("n_start must not exceed n_max".into()));
    }
    for n in cfg.n_start..=cfg.n_max {
        crate::grid::check_guard(model, n)?;
    }
    let mut records: Vec<ResolutionRecord> = Vec::new();
    let mut last: Option<GameSolution> = None;
    let mut stop = StopReason::MaxResolution;
    let mut max_decrease = f64::NEG_INFINITY;
    for n in cfg.n_start..=cfg.n_max {
        let sol = solve_game_with(model, n, &cfg.game)?;
        records.push(ResolutionRecord {
            resolution: n,
            value: sol.value.clone(),
            sum_beta: sol.sum_beta,
            sum_w: sol.sum_w,
            dual_identity_residual: sol.dual_identity_residual(),
            primal_violation: sol.primal_violation,
            constraint_count: sol.constraint_count(),
            lp_iterations: sol.lp_iterations,
        });
        let mut done = false;
        if let Some(prev) = &last {
            let mut diff: f64 = 0.0;
            for (state, (&b, &p)) in sol.value.iter().zip(&prev.value).enumerate() {
                let dec = p - b;
                max_decrease = max_decrease.max(dec);
                if dec > cfg.monotone_tol {
                    return Err(Error::Monotonicity { resolution: n as usize, state, violation: dec });
                }
                diff = diff.max(dec.abs());
            }
            done = diff < cfg.stop_tol;
        }
        last = Some(sol);
        if done {
            stop = StopReason::Converged;
            break;
        }
    }
    let final_solution = last.expect("at least one resolution");
    let feasibility = sample_feasibility(model, &final_solution, cfg);
    Ok(ConvergenceReport {
        records,
        beta_hat: final_solution.value.clone(),
        max_decrease: if max_decrease.is_finite() { max_decrease } else { 0.0 },
        stop,
        feasibility,
        final_solution,
    })
}

fn sample_feasibility(model: &MdpModel, sol: &GameSolution, cfg: &SequenceConfig) -> FeasibilityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = model.num_states();
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.feasibility_samples {
        for i in 0..s {
            let support = model.union_support_unchecked(i);
            let q = random_row(&mut rng, s, &support);
            let qb: f64 = q.iter().zip(&sol.value).map(|(a, b)| a * b).sum();
            let qv: f64 = q.iter().zip(&sol.potentials).map(|(a, b)| a * b).sum();
            let r: f64 = (0..model.num_actions())
                .map(|u| sol.minimizer.row(i)[u] * tilde_cost_unchecked(model, i, &q, u).or_sentinel(cfg.game.sentinel))
                .sum();
            worst = worst.max(qb - sol.value[i]).max(r - sol.value[i] + qv - sol.potentials[i]);
        }
    }
    let slack = 10.0 * cfg.stop_tol;
    FeasibilityCheck { samples: cfg.feasibility_samples, max_violation: worst, slack, passed: worst <= slack }
}

/// Settings for [`solve_congen`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongenConfig {
    /// Rows violated by more than this are added.
    pub inner_tol: f64,
    pub max_rounds: usize,
    pub game: GameConfig,
}

impl Default for CongenConfig {
    fn default() -> Self {
        CongenConfig { inner_tol: 1e-8, max_rounds: 500, game: GameConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongenOutcome {
    pub solution: GameSolution,
    pub rounds: usize,
    /// No violated row was left when the loop stopped.
    pub certified: bool,
    /// Largest violation found in the last separation round.
    pub last_violation: f64,
}

/// Most violated constraint at state `i` for the current `(V, β, y)`:
/// returns the kernel row and its violation.
///
/// The `β` family is maximized by a Dirac mass on the best successor. For
/// the `V` family the objective `Σᵤ yᵢ(u) c̃(i,q,u) + Σⱼ q(j)Vⱼ` is concave on
/// each face of the simplex where the set of actions with finite reward is
/// fixed, with maximizer `q(j) ∝ exp((Vⱼ + Σᵤ yᵢ(u) log p(j|i,u)) / Y)`
/// (`Y` the weight of those actions); enumerating the faces cut out by the
/// action supports covers every case.
pub fn separate(
    model: &MdpModel,
    i: usize,
    value: &[f64],
    potentials: &[f64],
    y: &[f64],
    cfg: &GameConfig,
) -> (Vec<f64>, f64) {
    let s = model.num_states();
    let union = model.union_support_unchecked(i);

    let jb = *union.iter().max_by(|&&a, &&b| value[a].total_cmp(&value[b]).then(b.cmp(&a))).expect("nonempty support");
    let mut best_row = vec![0.0; s];
    best_row[jb] = 1.0;
    let mut best = value[jb] - value[i];

    let active: Vec<usize> = (0..model.num_actions()).filter(|&u| y[u] > 1e-12).collect();
    let v_bracket = |q: &[f64]| -> f64 {
        let r: f64 = active.iter().map(|&u| y[u] * tilde_cost_unchecked(model, i, q, u).or_sentinel(cfg.sentinel)).sum();
        let qv: f64 = q.iter().zip(potentials).map(|(a, b)| a * b).sum();
        r + qv - value[i] - potentials[i]
    };
    for mask in 0u32..(1u32 << active.len()) {
        let face: Vec<usize> = union
            .iter()
            .copied()
            .filter(|&j| active.iter().enumerate().all(|(b, &u)| mask & (1 << b) == 0 || model.p(i, u, j) > 0.0))
            .collect();
        if face.is_empty() {
            continue;
        }
        let finite: Vec<usize> = active.iter().copied().filter(|&u| face.iter().all(|&j| model.p(i, u, j) > 0.0)).collect();
        let weight: f64 = finite.iter().map(|&u| y[u]).sum();
        let mut q = vec![0.0; s];
        if weight > 0.0 {
            let score: Vec<f64> = face
                .iter()
                .map(|&j| (potentials[j] + finite.iter().map(|&u| y[u] * ln(model.p(i, u, j))).sum::<f64>()) / weight)
                .collect();
            let m = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = score.iter().map(|&x| exp(x - m)).sum();
            for (&j, &x) in face.iter().zip(&score) {
                q[j] = exp(x - m) / z;
            }
        } else {
            let j = *face.iter().max_by(|&&a, &&b| potentials[a].total_cmp(&potentials[b]).then(b.cmp(&a))).unwrap();
            q[j] = 1.0;
        }
        let viol = v_bracket(&q);
        if viol > best {
            best = viol;
            best_row = q;
        }
    }
    (best_row, best)
}

/// Solve the semi-infinite programs by constraint generation, starting
/// from the Dirac rows on each union support.
pub fn solve_congen(model: &MdpModel, cfg: &CongenConfig) -> Result<CongenOutcome> {
    let s = model.num_states();
    let mut rows: RowSet = (0..s)
        .map(|i| {
            model
                .union_support_unchecked(i)
                .into_iter()
                .map(|j| {
                    let mut r = vec![0.0; s];
                    r[j] = 1.0;
                    r
                })
                .collect()
        })
        .collect();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let sol = solve_rows(model, rows.clone(), &cfg.game)?;
        let mut added = false;
        let mut worst: f64 = f64::NEG_INFINITY;
        for i in 0..s {
            let (q, viol) = separate(model, i, &sol.value, &sol.potentials, sol.minimizer.row(i), &cfg.game);
            worst = worst.max(viol);
            if viol > cfg.inner_tol && !rows[i].iter().any(|r| r == &q) {
                rows[i].push(q);
                added = true;
            }
        }
        if !added || rounds >= cfg.max_rounds {
            return Ok(CongenOutcome { solution: sol, rounds, certified: !added, last_violation: worst.max(0.0) });
        }
    }
}
