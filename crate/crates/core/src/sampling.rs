//! Seeded, chunked Monte Carlo reductions.
//!
//! Replications are split into fixed-size chunks; chunk `i` draws from the
//! ChaCha8 stream `i` of the master seed. Chunk boundaries do not depend on the
//! thread count, so the parallel and serial reductions are bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK_SIZE: u64 = 1 << 14;

/// Seed used when a caller does not provide one.
pub const DEFAULT_SEED: u64 = 0;

pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunk_len(total: u64, chunk: u64) -> u64 {
    (total - chunk * CHUNK_SIZE).min(CHUNK_SIZE)
}

fn chunk_count(total: u64) -> u64 {
    total.div_ceil(CHUNK_SIZE)
}

/// Number of replications for which `trial` returns true, in parallel.
pub fn count_successes<F>(replications: u64, seed: u64, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    (0..chunk_count(replications))
        .into_par_iter()
        .map(|chunk| count_chunk(replications, seed, chunk, &trial))
        .sum()
}

/// Serial reference for [`count_successes`].
pub fn count_successes_serial<F>(replications: u64, seed: u64, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool,
{
    (0..chunk_count(replications))
        .map(|chunk| count_chunk(replications, seed, chunk, &trial))
        .sum()
}

fn count_chunk<F>(total: u64, seed: u64, chunk: u64, trial: &F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool,
{
    let mut rng = chunk_rng(seed, chunk);
    (0..chunk_len(total, chunk)).filter(|_| trial(&mut rng)).count() as u64
}

/// Evaluates `draw` once per replication and returns the results in
/// replication order.
pub fn map_replications<T, F>(replications: u64, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let chunks: Vec<Vec<T>> = (0..chunk_count(replications))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            (0..chunk_len(replications, chunk)).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn parallel_equals_serial() {
        let trial = |rng: &mut ChaCha8Rng| rng.random::<f64>() < 0.3;
        let total = 3 * CHUNK_SIZE + 17;
        assert_eq!(count_successes(total, 42, trial), count_successes_serial(total, 42, trial));
        let a = map_replications(total, 7, |rng| rng.random::<u32>());
        let b = map_replications(total, 7, |rng| rng.random::<u32>());
        assert_eq!(a.len() as u64, total);
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = map_replications(64, 1, |rng| rng.random::<u64>());
        let b = map_replications(64, 2, |rng| rng.random::<u64>());
        assert_ne!(a, b);
    }

    #[test]
    fn zero_replications() {
        assert_eq!(count_successes(0, 0, |_| true), 0);
        assert!(map_replications(0, 0, |_| 1u8).is_empty());
    }
}
