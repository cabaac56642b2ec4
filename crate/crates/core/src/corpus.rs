//! Seeded synthetic token sources for benchmarks and acceptance runs.

use rand_core::RngCore;
use serde::Serialize;

use crate::probmodel::{noise_rng, unit_f64, NoiseRng};

/// First-order Markov source. Each symbol has `branching` successors
/// chosen at random, with weights `w_i = exp(spread * g_i)` for standard
/// normal `g_i`, plus a `leak` probability of jumping to any symbol
/// uniformly.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovSource {
    pub alphabet_size: u32,
    pub branching: u32,
    pub spread: f64,
    pub leak: f64,
    pub seed: u64,
    #[serde(skip)]
    successors: Vec<Vec<(u32, f64)>>,
}

fn normal(rng: &mut NoiseRng) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    let u = 1.0 - unit_f64(rng);
    let v = unit_f64(rng);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

impl MarkovSource {
    pub fn new(alphabet_size: u32, branching: u32, spread: f64, leak: f64, seed: u64) -> Self {
        assert!(alphabet_size >= 2 && branching >= 1);
        assert!((0.0..=1.0).contains(&leak));
        let mut rng = noise_rng(seed);
        let successors = (0..alphabet_size)
            .map(|_| {
                let mut row: Vec<(u32, f64)> = (0..branching)
                    .map(|_| (rng.next_u32() % alphabet_size, (spread * normal(&mut rng)).exp()))
                    .collect();
                let total: f64 = row.iter().map(|e| e.1).sum();
                let mut acc = 0.0;
                for e in row.iter_mut() {
                    acc += e.1 / total;
                    e.1 = acc;
                }
                row
            })
            .collect();
        MarkovSource { alphabet_size, branching, spread, leak, seed, successors }
    }

    /// The source used by the loss-bound acceptance run and the default bench.
    pub fn reference(alphabet_size: u32, seed: u64) -> Self {
        Self::new(alphabet_size, 8, 1.0, 0.01, seed)
    }

    /// `len` tokens drawn with a stream seeded by `stream_seed`.
    pub fn generate(&self, len: usize, stream_seed: u64) -> Vec<u32> {
        let mut rng = noise_rng(stream_seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut state = rng.next_u32() % self.alphabet_size;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            state = if unit_f64(&mut rng) < self.leak {
                rng.next_u32() % self.alphabet_size
            } else {
                let row = &self.successors[state as usize];
                let u = unit_f64(&mut rng);
                let i = row.partition_point(|e| e.1 <= u).min(row.len() - 1);
                row[i].0
            };
            out.push(state);
        }
        out
    }
}

/// IID tokens skewed towards small ids: `t = floor(n * u^3)`.
pub fn skewed_iid(alphabet_size: u32, len: usize, seed: u64) -> Vec<u32> {
    let mut rng = noise_rng(seed);
    (0..len)
        .map(|_| ((alphabet_size as f64 * unit_f64(&mut rng).powi(3)) as u32).min(alphabet_size - 1))
        .collect()
}
