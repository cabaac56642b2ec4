//! Shared workloads for the criterion benchmarks.

use pmatic::corpus::MarkovSource;
use pmatic::Codebook;

pub struct Workload {
    pub name: &'static str,
    pub alphabet_size: u32,
    pub tokens: Vec<u32>,
    pub codebook: Codebook,
}

impl Workload {
    pub fn markov(name: &'static str, alphabet_size: u32, len: usize) -> Self {
        let tokens = MarkovSource::reference(alphabet_size, 7).generate(len, 1);
        Workload { name, alphabet_size, tokens, codebook: Codebook::build(alphabet_size, 0).expect("valid alphabet") }
    }
}

/// Bytes, a mid-size alphabet, and an LLM-sized vocabulary.
pub fn standard_workloads() -> Vec<Workload> {
    vec![
        Workload::markov("bytes", 256, 20_000),
        Workload::markov("vocab-4k", 4096, 4_000),
        Workload::markov("vocab-128k", 128_256, 200),
    ]
}
