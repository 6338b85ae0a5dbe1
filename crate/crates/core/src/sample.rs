//! Seeded random kernels and models.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::math::ln;
use crate::model::MdpModel;

/// Uniform draw from the probability simplex over `support`, embedded in a
/// row of length `num_states`.
pub fn random_row(rng: &mut impl Rng, num_states: usize, support: &[usize]) -> Vec<f64> {
    let mut row = vec![0.0; num_states];
    let mut total = 0.0;
    for &j in support {
        let e = -ln(1.0 - rng.random::<f64>());
        row[j] = e;
        total += e;
    }
    for &j in support {
        row[j] /= total;
    }
    row
}

/// Shape of the models drawn by [`random_model`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelShape {
    pub num_states: usize,
    pub num_actions: usize,
    /// Extra successors added to each state's cycle edge `{i, i+1}`.
    pub extra_successors: usize,
    /// Lower bound on every positive transition probability.
    pub min_prob: f64,
}

/// A random model whose kernels all contain the cycle `i → i+1 (mod s)`
/// together with the self-loop, so every stationary policy is irreducible.
/// All actions at a state share one support; costs are uniform on `[0, 1]`.
pub fn random_model(rng: &mut impl Rng, shape: &ModelShape) -> Result<MdpModel> {
    let s = shape.num_states;
    let mut supports = Vec::with_capacity(s);
    for i in 0..s {
        let mut sup = vec![i, (i + 1) % s];
        let mut others: Vec<usize> = (0..s).filter(|j| !sup.contains(j)).collect();
        for _ in 0..shape.extra_successors.min(others.len()) {
            let k = rng.random_range(0..others.len());
            sup.push(others.swap_remove(k));
        }
        sup.sort_unstable();
        sup.dedup();
        supports.push(sup);
    }
    let mut kernel = Vec::with_capacity(shape.num_actions);
    for _ in 0..shape.num_actions {
        let mut rows = Vec::with_capacity(s);
        for sup in &supports {
            let mut row = random_row(rng, s, sup);
            let floor = shape.min_prob.min(1.0 / sup.len() as f64);
            let scale = 1.0 - floor * sup.len() as f64;
            for &j in sup {
                row[j] = floor + scale * row[j];
            }
            rows.push(row);
        }
        kernel.push(rows);
    }
    let cost = (0..s).map(|_| (0..shape.num_actions).map(|_| rng.random::<f64>()).collect()).collect();
    MdpModel::unlabeled(kernel, cost)
}
