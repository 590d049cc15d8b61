#![allow(dead_code)]

use causal_cones::causal_subspaces::Scenario;
use causal_cones::operator_core::{LabeledSpace, ProcessOperator, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(space: &LabeledSpace, rng: &mut ChaCha8Rng) -> ProcessOperator {
    let n = space.total_dim();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        data[i * n + i] = C64::new(rng.sample(StandardNormal), 0.0);
        for j in i + 1..n {
            let z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            data[i * n + j] = z;
            data[j * n + i] = z.conj();
        }
    }
    ProcessOperator::new(space.clone(), data).unwrap()
}

pub fn random_psd(space: &LabeledSpace, rng: &mut ChaCha8Rng) -> ProcessOperator {
    let h = random_hermitian(space, rng);
    ProcessOperator::new(space.clone(), h.matmul_data(&h).unwrap()).unwrap()
}

/// Every scenario of `n` parties whose systems have dimension 1 or 2.
pub fn binary_scenarios(n: usize) -> Vec<Scenario> {
    let names = ["A", "B", "C", "D"];
    (0..1usize << (2 * n))
        .map(|code| {
            let spec: Vec<(&str, usize, usize)> = (0..n)
                .map(|k| (names[k], 1 + ((code >> (2 * k)) & 1), 1 + ((code >> (2 * k + 1)) & 1)))
                .collect();
            Scenario::new(&spec).unwrap()
        })
        .collect()
}
