use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `master`: two SplitMix64 rounds, so nearby
/// masters and indices land on unrelated streams.
pub fn split_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_mul(0xd1b5_4a32_d192_ed03)))
}

/// Sharded Monte Carlo driver.
///
/// Work is cut into chunks of `chunk_size` draws; chunk `c` reads the
/// ChaCha8 stream seeded with `split_seed(seed, c)` and per-chunk results
/// are combined in chunk order. Results therefore depend on `seed` and
/// `chunk_size` only, never on `threads`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampler {
    pub seed: u64,
    pub chunk_size: u64,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler {
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
            threads: None,
        }
    }

    pub fn with_threads(self, threads: Option<usize>) -> Sampler {
        Sampler { threads, ..self }
    }

    pub fn with_chunk_size(self, chunk_size: u64) -> Sampler {
        Sampler {
            chunk_size: chunk_size.max(1),
            ..self
        }
    }

    /// Same configuration on an independent stream family.
    pub fn derive(&self, index: u64) -> Sampler {
        Sampler {
            seed: split_seed(self.seed, index),
            ..*self
        }
    }

    /// Runs `job(chunk_index, first_draw_index, rng, draws)` for every chunk
    /// and returns the results in chunk order.
    pub fn map_chunks<T, F>(&self, n_samples: u64, job: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, u64, &mut ChaCha8Rng, u64) -> T + Sync,
    {
        let chunk = self.chunk_size.max(1);
        let chunks = n_samples.div_ceil(chunk);
        let run = || {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(self.seed, c));
                    let draws = chunk.min(n_samples - c * chunk);
                    job(c, c * chunk, &mut rng, draws)
                })
                .collect::<Vec<T>>()
        };
        match self.threads {
            None => Ok(run()),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::param("threads", e.to_string()))
                .map(|pool| pool.install(run)),
        }
    }

    /// Number of draws for which `hit` returns true, with per-chunk scratch
    /// state created by `init`.
    pub fn count<S, I, F>(&self, n_samples: u64, init: I, hit: F) -> Result<u64>
    where
        I: Fn() -> S + Sync,
        F: Fn(&mut S, &mut ChaCha8Rng) -> bool + Sync,
    {
        let parts = self.map_chunks(n_samples, |_, _, rng, draws| {
            let mut state = init();
            (0..draws).filter(|_| hit(&mut state, rng)).count() as u64
        })?;
        Ok(parts.into_iter().sum())
    }

    /// Per-draw vectors of counters summed over all draws.
    pub fn tally<S, I, F>(&self, n_samples: u64, width: usize, init: I, step: F) -> Result<Vec<u64>>
    where
        I: Fn() -> S + Sync,
        F: Fn(&mut S, &mut ChaCha8Rng, &mut [u64]) + Sync,
    {
        let parts = self.map_chunks(n_samples, |_, _, rng, draws| {
            let mut state = init();
            let mut acc = vec![0u64; width];
            for _ in 0..draws {
                step(&mut state, rng, &mut acc);
            }
            acc
        })?;
        let mut total = vec![0u64; width];
        for part in parts {
            for (t, v) in total.iter_mut().zip(part) {
                *t += v;
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn split_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|c| split_seed(7, c)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(split_seed(7, 0), split_seed(8, 0));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let base = Sampler::new(42).with_chunk_size(1000);
        let run = |s: Sampler| {
            s.count(10_500, || (), |_, rng| rng.gen::<f64>() < 0.3)
                .unwrap()
        };
        let a = run(base.with_threads(Some(1)));
        let b = run(base.with_threads(Some(3)));
        assert_eq!(a, b);
        assert_ne!(a, run(Sampler::new(43).with_chunk_size(1000)));
    }

    #[test]
    fn chunks_cover_all_draws() {
        let s = Sampler::new(1).with_chunk_size(7);
        let sizes = s.map_chunks(30, |_, start, _, d| (start, d)).unwrap();
        assert_eq!(sizes, vec![(0, 7), (7, 7), (14, 7), (21, 7), (28, 2)]);
    }
}
