//! Dyadic kernel grids `𝒬ₙ`: rows with entries `k / 2ⁿ` supported on the
//! union support of each state.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::MdpModel;

/// Largest number of rows enumerated for a single state.
pub const ROW_GUARD: u128 = 1_000_000;

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of compositions of `2ⁿ` into `k` parts: `C(2ⁿ + k - 1, k - 1)`.
pub fn row_count(support_size: usize, resolution: u32) -> u128 {
    if support_size == 0 {
        return 0;
    }
    let total = 1u128 << resolution.min(120);
    binomial(total + support_size as u128 - 1, support_size as u128 - 1)
}

/// All compositions of `2ⁿ` into `k` nonnegative parts, in increasing
/// lexicographic order.
pub fn enumerate_rows(support_size: usize, resolution: u32) -> Result<Vec<Vec<u64>>> {
    if support_size == 0 {
        return Err(Error::InvalidParameter("support size must be at least 1".into()));
    }
    if resolution > 62 {
        return Err(Error::InvalidParameter("resolution must be at most 62".into()));
    }
    let count = row_count(support_size, resolution);
    if count > ROW_GUARD {
        return Err(Error::GuardExceeded { what: "dyadic grid rows", count, limit: ROW_GUARD });
    }
    let total = 1u64 << resolution;
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0u64; support_size];
    compositions(&mut current, 0, total, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn compositions(current: &mut [u64], pos: usize, remaining: u64, out: &mut Vec<Vec<u64>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.to_vec());
        return;
    }
    for k in 0..=remaining {
        current[pos] = k;
        compositions(current, pos + 1, remaining - k, out);
    }
}

/// One grid row: exact numerators over `2ⁿ` and their float values, both
/// indexed by the full state space.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub numerators: Vec<u64>,
    pub probs: Vec<f64>,
}

/// The rows `Aₙ(i)` for every state at a fixed resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub resolution: u32,
    pub rows: Vec<Vec<GridRow>>,
}

impl GridSpec {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn total_rows(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Row in `Aₙ(i)` closest to `target` in the sup norm; first one on ties.
    pub fn nearest(&self, i: usize, target: &[f64]) -> &GridRow {
        let dist = |r: &GridRow| r.probs.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut best = &self.rows[i][0];
        let mut best_d = dist(best);
        for r in &self.rows[i][1..] {
            let d = dist(r);
            if d < best_d {
                best = r;
                best_d = d;
            }
        }
        best
    }
}

/// Check the size guard for every state without enumerating.
pub fn check_guard(model: &MdpModel, resolution: u32) -> Result<()> {
    for i in 0..model.num_states() {
        let k = model.union_support_unchecked(i).len();
        let count = row_count(k, resolution);
        if count > ROW_GUARD || resolution > 62 {
            return Err(Error::GuardExceeded { what: "dyadic grid rows", count, limit: ROW_GUARD });
        }
    }
    Ok(())
}

pub fn build_grid(model: &MdpModel, resolution: u32) -> Result<GridSpec> {
    check_guard(model, resolution)?;
    let s = model.num_states();
    let scale = (1u64 << resolution) as f64;
    let mut rows = Vec::with_capacity(s);
    for i in 0..s {
        let support = model.union_support_unchecked(i);
        let comps = enumerate_rows(support.len(), resolution)?;
        let state_rows = comps
            .into_iter()
            .map(|c| {
                let mut numerators = vec![0u64; s];
                for (&j, &k) in support.iter().zip(&c) {
                    numerators[j] = k;
                }
                let probs = numerators.iter().map(|&k| k as f64 / scale).collect();
                GridRow { numerators, probs }
            })
            .collect();
        rows.push(state_rows);
    }
    Ok(GridSpec { resolution, rows })
}
