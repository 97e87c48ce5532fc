//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treegen_core::generative::{default_delta, Generator, Kind};
use treegen_core::tree::random_tree;
use treegen_core::LabeledTree;

/// Random tree with `n` edges over `1..=m`, the same for every run.
pub fn tree(n: usize, m: u32) -> LabeledTree {
    random_tree(
        &mut ChaCha8Rng::seed_from_u64(n as u64 * 1000 + m as u64),
        n,
        m,
    )
}

pub fn generator(kind: Kind, n: usize, d: usize) -> Generator {
    Generator::build(kind, &tree(n, 5), d, default_delta()).expect("fixture builds")
}

/// `count` in-domain inputs for `g`, already scaled for [`Generator::eval_scaled`].
pub fn inputs(g: &Generator, count: usize) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let steps = g.net.input_scale();
    (0..count)
        .map(|_| {
            (0..g.input_width())
                .map(|j| match g.kind {
                    Kind::Te => rng.gen_range(0..steps),
                    _ => {
                        let (lo, hi) = g.int_domain(j);
                        rng.gen_range(lo..=hi)
                    }
                })
                .collect()
        })
        .collect()
}
