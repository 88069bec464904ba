#![allow(dead_code)]

//! Shared fixtures for the integration suites: the worked example matrices
//! (parsed from the repository's data files, exercising the text format on
//! the way), deterministic rational data vectors, and the generated
//! balanced-tree corpus.

use partition_mle::fraction::Fraction;
use partition_mle::matrix::{parse_matrix_text, MultipartitionMatrix};
use partition_mle::staged_tree::{generate_balanced_stratified, GeneratorConfig, StagedTree};

pub fn matrix_from(text: &str) -> MultipartitionMatrix {
    MultipartitionMatrix::new(parse_matrix_text(text).expect("parse")).expect("validate")
}

pub fn independence2x2() -> MultipartitionMatrix {
    matrix_from(include_str!("../../../../data/twobytwo.txt"))
}

pub fn grip14() -> MultipartitionMatrix {
    matrix_from(include_str!("../../../../data/grip14.txt"))
}

pub fn diffrep_a() -> MultipartitionMatrix {
    matrix_from(include_str!("../../../../data/diffrep_a.txt"))
}

pub fn diffrep_identity() -> MultipartitionMatrix {
    matrix_from(include_str!("../../../../data/diffrep_id.txt"))
}

pub fn independence_dup5() -> MultipartitionMatrix {
    matrix_from(include_str!("../../../../data/indep_dup5.txt"))
}

/// splitmix64: a small deterministic stream for test data.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// A strictly positive, exactly normalized rational data vector.
pub fn rational_data(rng: &mut TestRng, m: usize) -> Vec<Fraction> {
    let nums: Vec<i64> = (0..m).map(|_| 1 + rng.below(999) as i64).collect();
    let total: i64 = nums.iter().sum();
    nums.into_iter().map(|n| Fraction::new(n, total)).collect()
}

/// The corpus tree for a given seed: levels 2..4, branching up to 4.
pub fn corpus_config(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        levels: 2 + (seed as usize % 3),
        max_branching: 2 + (seed as usize % 3),
        stage_merge_prob: [0.3, 0.5, 0.7][(seed as usize / 3) % 3],
    }
}

pub fn corpus_tree(seed: u64) -> StagedTree {
    generate_balanced_stratified(seed, &corpus_config(seed))
}
