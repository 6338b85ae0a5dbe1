//! The fixed test corpus: ten seeded random models.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskmdp_core::sample::{random_model, ModelShape};
use riskmdp_core::MdpModel;

pub const CORPUS_SEED: u64 = 12345;

/// `(num_states, num_actions)` of each corpus entry, in order.
pub const CORPUS_SHAPES: [(usize, usize); 10] =
    [(2, 2), (3, 3), (4, 2), (2, 3), (3, 2), (4, 3), (2, 2), (3, 3), (4, 2), (2, 3)];

/// Ten models with 2 to 4 states and 2 or 3 actions, costs in `[0, 1]`, and
/// kernel supports of 2 or 3 states (cycle edge, self-loop, one random
/// extra successor), drawn from one generator seeded with [`CORPUS_SEED`].
pub fn corpus() -> Vec<MdpModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    CORPUS_SHAPES
        .iter()
        .map(|&(s, a)| {
            let shape = ModelShape { num_states: s, num_actions: a, extra_successors: 1, min_prob: 0.05 };
            random_model(&mut rng, &shape).expect("generated models are valid")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_stable() {
        let a = corpus();
        assert_eq!(a, corpus());
        for (m, &(s, u)) in a.iter().zip(&CORPUS_SHAPES) {
            assert_eq!((m.num_states(), m.num_actions()), (s, u));
            for i in 0..s {
                let k = m.union_support(i).unwrap().len();
                assert!((2..=3).contains(&k));
            }
        }
    }
}
