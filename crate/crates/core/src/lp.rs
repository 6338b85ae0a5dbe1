//! Linear programming by a bounded-variable revised simplex method.
//!
//! Problems are stored with sparse rows, per-constraint relations, and
//! per-variable bounds (free variables are native, not split). Solving uses a
//! two-phase primal simplex on the row-scaled problem with a dense explicit
//! basis inverse, Dantzig pricing, and Bland's rule once too many degenerate
//! pivots happen in a row. The basis dimension equals the number of
//! constraints, so the method is meant for programs with few rows and
//! arbitrarily many columns.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    relations: Vec<Relation>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Add a variable with bounds `lower ≤ x ≤ upper` (either may be
    /// infinite) and return its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        assert!(cost.is_finite(), "objective coefficients must be finite");
        assert!(lower <= upper, "empty bound interval");
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Variable with the usual `x ≥ 0` bound.
    pub fn add_nonneg(&mut self, cost: f64) -> usize {
        self.add_var(cost, 0.0, f64::INFINITY)
    }

    pub fn add_free(&mut self, cost: f64) -> usize {
        self.add_var(cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Add `Σ coef·x  rel  rhs`. Repeated columns are merged and zeros
    /// dropped.
    pub fn add_constraint(&mut self, entries: &[(usize, f64)], relation: Relation, rhs: f64) -> usize {
        assert!(rhs.is_finite(), "right-hand sides must be finite");
        let mut row: Vec<(usize, f64)> = entries.to_vec();
        row.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (c, v) in row {
            assert!(c < self.objective.len(), "constraint references unknown variable {c}");
            assert!(v.is_finite(), "constraint coefficients must be finite");
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(merged);
        self.relations.push(relation);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn relation(&self, r: usize) -> Relation {
        self.relations[r]
    }

    pub fn rhs(&self, r: usize) -> f64 {
        self.rhs[r]
    }

    /// Deduplicated `(row, column, value)` triplets in row order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    /// `Σ coef·x` for constraint `r`.
    pub fn row_activity(&self, r: usize, x: &[f64]) -> f64 {
        self.rows[r].iter().map(|&(c, v)| v * x[c]).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of constraints and bounds at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows.len() {
            let a = self.row_activity(r, x);
            let b = self.rhs[r];
            let v = match self.relations[r] {
                Relation::Le => (a - b).max(0.0),
                Relation::Ge => (b - a).max(0.0),
                Relation::Eq => (a - b).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

/// Solver output. Duals follow the sign convention of the stated sense: for
/// a minimization, `≥` rows have nonnegative duals and `≤` rows nonpositive
/// ones; for a maximization the signs flip. The objective equals
/// `Σ dual·rhs + Σ reduced_cost·x` over variables at finite bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub gap_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            gap_tol: 1e-7,
            bland_after: 500,
            refactor_every: 50,
            max_iters: 1_000_000,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    let mut s = Simplex::new(lp, opts);
    s.run()
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Zero,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    opts: SolverOptions,
    m: usize,
    n: usize,
    // structural columns in compressed sparse column form (scaled)
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_scale: Vec<f64>,
    b: Vec<f64>,
    // per column: structural 0..n, slack n..n+m, artificial n+m..n+2m
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    iterations: usize,
    pivots_since_refactor: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, opts: &SolverOptions) -> Self {
        let m = lp.num_constraints();
        let n = lp.num_vars();
        let row_scale: Vec<f64> = lp
            .rows
            .iter()
            .map(|row| {
                let mx = row.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
                if mx > 0.0 {
                    1.0 / mx
                } else {
                    1.0
                }
            })
            .collect();
        let mut counts = vec![0usize; n + 1];
        for row in &lp.rows {
            for &(c, _) in row {
                counts[c + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for (r, row) in lp.rows.iter().enumerate() {
            for &(c, v) in row {
                col_row[fill[c]] = r;
                col_val[fill[c]] = v * row_scale[r];
                fill[c] += 1;
            }
        }
        let b: Vec<f64> = lp.rhs.iter().zip(&row_scale).map(|(b, s)| b * s).collect();

        let total = n + 2 * m;
        let mut lo = Vec::with_capacity(total);
        let mut up = Vec::with_capacity(total);
        lo.extend_from_slice(&lp.lower);
        up.extend_from_slice(&lp.upper);
        for rel in &lp.relations {
            let (l, u) = match rel {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
        }
        for _ in 0..m {
            lo.push(0.0);
            up.push(f64::INFINITY);
        }
        Simplex {
            lp,
            opts: *opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            row_scale,
            b,
            lo,
            up,
            cost: vec![0.0; total],
            art_sign: vec![1.0; m],
            x: vec![0.0; total],
            state: vec![VarState::AtLower; total],
            basis: Vec::with_capacity(m),
            binv: Vec::new(),
            iterations: 0,
            pivots_since_refactor: 0,
        }
    }

    /// `y · a_j`.
    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1]).map(|k| y[self.col_row[k]] * self.col_val[k]).sum()
        } else if j < self.n + self.m {
            y[j - self.n]
        } else {
            let r = j - self.n - self.m;
            self.art_sign[r] * y[r]
        }
    }

    /// `out += scale · a_j`.
    fn axpy_col(&self, j: usize, scale: f64, out: &mut [f64]) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                out[self.col_row[k]] += scale * self.col_val[k];
            }
        } else if j < self.n + self.m {
            out[j - self.n] += scale;
        } else {
            let r = j - self.n - self.m;
            out[r] += scale * self.art_sign[r];
        }
    }

    fn dense_col(&self, j: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        self.axpy_col(j, 1.0, &mut a);
        a
    }

    fn initial_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let (l, u) = (self.lo[j], self.up[j]);
            let (st, v) = if l.is_finite() {
                (VarState::AtLower, l)
            } else if u.is_finite() {
                (VarState::AtUpper, u)
            } else {
                (VarState::Zero, 0.0)
            };
            self.state[j] = st;
            self.x[j] = v;
        }
        let mut resid = self.b.clone();
        for j in 0..n {
            if self.x[j] != 0.0 {
                self.axpy_col(j, -self.x[j], &mut resid);
            }
        }
        self.basis.clear();
        for r in 0..m {
            let slack = n + r;
            let art = n + m + r;
            let fits = resid[r] >= self.lo[slack] && resid[r] <= self.up[slack] && self.lo[slack] < self.up[slack];
            self.state[slack] = if self.lo[slack].is_finite() { VarState::AtLower } else { VarState::AtUpper };
            self.x[slack] = 0.0;
            if fits {
                self.state[slack] = VarState::Basic;
                self.x[slack] = resid[r];
                self.basis.push(slack);
                self.art_sign[r] = 1.0;
                self.state[art] = VarState::AtLower;
                self.x[art] = 0.0;
                self.up[art] = 0.0;
            } else {
                self.art_sign[r] = if resid[r] >= 0.0 { 1.0 } else { -1.0 };
                self.state[art] = VarState::Basic;
                self.x[art] = resid[r].abs();
                self.basis.push(art);
            }
        }
        // Every basic column is ±e_r, so the inverse is diagonal.
        self.binv = (0..m)
            .map(|r| {
                let mut row = vec![0.0; m];
                let j = self.basis[r];
                row[r] = if j >= n + m { self.art_sign[r] } else { 1.0 };
                row
            })
            .collect();
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut bmat = vec![vec![0.0; m]; m];
        for (c, &j) in self.basis.iter().enumerate() {
            let col = self.dense_col(j);
            for r in 0..m {
                bmat[r][c] = col[r];
            }
        }
        self.binv = linalg::invert(&bmat)
            .ok_or_else(|| Error::NumericalBreakdown(format!("singular basis after {} iterations", self.iterations)))?;
        let mut rhs = self.b.clone();
        for j in 0..self.x.len() {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                self.axpy_col(j, -self.x[j], &mut rhs);
            }
        }
        let xb = linalg::mat_vec(&self.binv, &rhs);
        for (r, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[r];
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                for k in 0..m {
                    y[k] += c * self.binv[r][k];
                }
            }
        }
        y
    }

    fn eligible(&self, j: usize, d: f64) -> Option<f64> {
        let tol = self.opts.opt_tol;
        match self.state[j] {
            VarState::Basic => None,
            _ if self.lo[j] == self.up[j] => None,
            VarState::AtLower if d < -tol => Some(1.0),
            VarState::AtUpper if d > tol => Some(-1.0),
            VarState::Zero if d.abs() > tol => Some(if d < 0.0 { 1.0 } else { -1.0 }),
            _ => None,
        }
    }

    fn iterate(&mut self, bland: bool) -> Result<(Step, bool)> {
        let y = self.duals();
        let total = self.x.len();
        let mut enter: Option<(usize, f64, f64)> = None;
        for j in 0..total {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let d = self.cost[j] - self.dot_col(j, &y);
            if let Some(dir) = self.eligible(j, d) {
                match enter {
                    None => enter = Some((j, dir, d.abs())),
                    Some((_, _, best)) if !bland && d.abs() > best => enter = Some((j, dir, d.abs())),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }
        let Some((q, dir, _)) = enter else {
            return Ok((Step::Optimal, false));
        };

        let aq = self.dense_col(q);
        let w = linalg::mat_vec(&self.binv, &aq);

        // Ratio test. Basic x_B[r] moves by -dir·w[r] per unit step.
        let mut t_best = f64::INFINITY;
        for r in 0..self.m {
            if let Some(t) = self.row_limit(r, dir * w[r]) {
                t_best = t_best.min(t);
            }
        }
        let mut leave: Option<usize> = None;
        if t_best.is_finite() {
            for r in 0..self.m {
                if let Some(t) = self.row_limit(r, dir * w[r]) {
                    if t <= t_best + DEGENERATE_STEP {
                        leave = match leave {
                            None => Some(r),
                            Some(prev) if bland => {
                                if self.basis[r] < self.basis[prev] {
                                    Some(r)
                                } else {
                                    Some(prev)
                                }
                            }
                            Some(prev) => {
                                if w[r].abs() > w[prev].abs() {
                                    Some(r)
                                } else {
                                    Some(prev)
                                }
                            }
                        };
                    }
                }
            }
            if let Some(r) = leave {
                t_best = self.row_limit(r, dir * w[r]).unwrap_or(t_best);
            }
        }
        let flip = self.up[q] - self.lo[q];
        if flip.is_finite() && flip <= t_best {
            // Bound flip, basis unchanged.
            for r in 0..self.m {
                let j = self.basis[r];
                self.x[j] -= dir * w[r] * flip;
            }
            if dir > 0.0 {
                self.x[q] = self.up[q];
                self.state[q] = VarState::AtUpper;
            } else {
                self.x[q] = self.lo[q];
                self.state[q] = VarState::AtLower;
            }
            return Ok((Step::Continue, flip < DEGENERATE_STEP));
        }
        let Some(r) = leave else {
            return Ok((Step::Unbounded, false));
        };
        let t = t_best.max(0.0);
        for k in 0..self.m {
            let j = self.basis[k];
            self.x[j] -= dir * w[k] * t;
        }
        self.x[q] += dir * t;
        let out = self.basis[r];
        if dir * w[r] > 0.0 {
            self.x[out] = self.lo[out];
            self.state[out] = VarState::AtLower;
        } else {
            self.x[out] = self.up[out];
            self.state[out] = VarState::AtUpper;
        }
        self.state[q] = VarState::Basic;
        self.basis[r] = q;

        let piv = w[r];
        let m = self.m;
        let pivot_row: Vec<f64> = self.binv[r].iter().map(|v| v / piv).collect();
        for k in 0..m {
            if k == r {
                continue;
            }
            let f = w[k];
            if f != 0.0 {
                for (a, b) in self.binv[k].iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
            }
        }
        self.binv[r] = pivot_row;
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= self.opts.refactor_every {
            self.refactor()?;
        }
        Ok((Step::Continue, t < DEGENERATE_STEP))
    }

    /// Step length at which basic row `r` hits a bound, when it decreases at
    /// rate `rate` (negative rate means it increases).
    fn row_limit(&self, r: usize, rate: f64) -> Option<f64> {
        if rate.abs() <= PIVOT_TOL {
            return None;
        }
        let j = self.basis[r];
        if rate > 0.0 {
            let l = self.lo[j];
            l.is_finite().then(|| ((self.x[j] - l) / rate).max(0.0))
        } else {
            let u = self.up[j];
            u.is_finite().then(|| ((u - self.x[j]) / -rate).max(0.0))
        }
    }

    fn phase(&mut self) -> Result<Step> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.opts.max_iters {
                return Err(Error::NumericalBreakdown(format!(
                    "iteration limit {} reached",
                    self.opts.max_iters
                )));
            }
            let bland = degenerate_run >= self.opts.bland_after;
            let (step, degenerate) = self.iterate(bland)?;
            match step {
                Step::Continue => {
                    self.iterations += 1;
                    if degenerate {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                }
                other => return Ok(other),
            }
        }
    }

    fn run(&mut self) -> Result<LpSolution> {
        let (n, m) = (self.n, self.m);
        self.initial_basis();

        // Phase 1: minimize the sum of artificials.
        for j in 0..self.cost.len() {
            self.cost[j] = if j >= n + m { 1.0 } else { 0.0 };
        }
        let infeasibility = {
            self.phase()?;
            self.refactor()?;
            (n + m..n + 2 * m).map(|j| self.x[j].max(0.0)).sum::<f64>()
        };
        let bnorm = self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeasibility > self.opts.feas_tol * (1.0 + bnorm) * (m.max(1) as f64) {
            return Ok(self.report(LpStatus::Infeasible));
        }

        // Phase 2: artificials pinned at zero.
        for j in n + m..n + 2 * m {
            self.up[j] = 0.0;
            if self.state[j] != VarState::Basic {
                self.x[j] = 0.0;
                self.state[j] = VarState::AtLower;
            }
        }
        let sign = match self.lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for j in 0..self.cost.len() {
            self.cost[j] = if j < n { sign * self.lp.objective[j] } else { 0.0 };
        }
        match self.phase()? {
            Step::Unbounded => return Ok(self.report(LpStatus::Unbounded)),
            _ => self.refactor()?,
        }
        // One more pricing pass after refactorization to clean up drift.
        if let Step::Unbounded = self.phase()? {
            return Ok(self.report(LpStatus::Unbounded));
        }
        let sol = self.report(LpStatus::Optimal);
        if sol.primal_residual > 1e3 * self.opts.feas_tol * (1.0 + bnorm) {
            return Err(Error::NumericalBreakdown(format!(
                "primal residual {:e} after optimization",
                sol.primal_residual
            )));
        }
        Ok(sol)
    }

    fn report(&self, status: LpStatus) -> LpSolution {
        let (n, m) = (self.n, self.m);
        let sign = match self.lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let x: Vec<f64> = self.x[..n].to_vec();
        let y_int = self.duals();
        let duals: Vec<f64> = (0..m).map(|r| sign * y_int[r] * self.row_scale[r]).collect();
        let reduced_costs: Vec<f64> = (0..n).map(|j| sign * (self.cost[j] - self.dot_col(j, &y_int))).collect();

        let mut dual_residual: f64 = 0.0;
        if status == LpStatus::Optimal {
            for j in 0..n + m {
                if self.lo[j] == self.up[j] {
                    continue;
                }
                let d = self.cost[j] - self.dot_col(j, &y_int);
                let viol = match self.state[j] {
                    VarState::Basic | VarState::Zero => d.abs(),
                    VarState::AtLower => (-d).max(0.0),
                    VarState::AtUpper => d.max(0.0),
                };
                // a basic variable strictly inside its bounds must have d = 0;
                // one at a bound only needs the matching sign
                let viol = if self.state[j] == VarState::Basic {
                    if self.x[j] <= self.lo[j] + self.opts.feas_tol {
                        (-d).max(0.0)
                    } else if self.x[j] >= self.up[j] - self.opts.feas_tol {
                        d.max(0.0)
                    } else {
                        viol
                    }
                } else {
                    viol
                };
                dual_residual = dual_residual.max(viol);
            }
        }
        let objective = self.lp.objective_value(&x);
        let mut dual_objective: f64 = (0..m).map(|r| duals[r] * self.lp.rhs[r]).sum();
        for j in 0..n {
            if self.state[j] != VarState::Basic && x[j] != 0.0 {
                dual_objective += reduced_costs[j] * x[j];
            }
        }
        LpSolution {
            status,
            primal_residual: self.lp.primal_residual(&x),
            x,
            duals,
            reduced_costs,
            objective,
            dual_objective,
            duality_gap: objective - dual_objective,
            dual_residual,
            iterations: self.iterations,
        }
    }
}
