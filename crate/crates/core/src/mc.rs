//! Seeded, reproducible Monte Carlo plumbing.
//!
//! Every estimator splits its sample budget into fixed-size blocks. Block `i`
//! draws from ChaCha8 stream `i` of the caller's seed, and block results are
//! merged in block order, so the outcome depends only on `(seed, samples)` and
//! never on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples per independent RNG stream.
pub const BLOCK_SIZE: u64 = 2048;

/// A Monte Carlo result: value, standard error, sample count and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// A value known in closed form.
    pub fn exact(value: f64) -> Self {
        MCEstimate {
            value,
            stderr: 0.0,
            samples: 0,
            seed: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.stderr == 0.0
    }

    /// `|self - other|` in units of the combined standard error.
    ///
    /// Returns 0 for identical values and infinity when both errors vanish
    /// but the values differ.
    pub fn z_score(&self, other: &MCEstimate) -> f64 {
        z_score(self.value, self.stderr, other.value, other.stderr)
    }

    /// True when the two estimates agree within `nsigma` combined standard errors.
    pub fn agrees_with(&self, other: &MCEstimate, nsigma: f64) -> bool {
        self.z_score(other) <= nsigma
    }

    pub fn scaled(self, factor: f64) -> Self {
        MCEstimate {
            value: self.value * factor,
            stderr: self.stderr * factor.abs(),
            ..self
        }
    }
}

/// Distance between two estimates in units of their combined error.
pub fn z_score(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let diff = (a - b).abs();
    let sigma = (sa * sa + sb * sb).sqrt();
    if diff == 0.0 {
        0.0
    } else if sigma == 0.0 {
        f64::INFINITY
    } else {
        diff / sigma
    }
}

/// The RNG for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed from a parent seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Running mean and co-moments of a `K`-vector of observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<const K: usize> {
    pub n: u64,
    pub mean: [f64; K],
    /// Sum of centered cross products.
    pub comoment: [[f64; K]; K],
}

impl<const K: usize> Default for Moments<K> {
    fn default() -> Self {
        Moments {
            n: 0,
            mean: [0.0; K],
            comoment: [[0.0; K]; K],
        }
    }
}

impl<const K: usize> Moments<K> {
    pub fn push(&mut self, x: [f64; K]) {
        self.n += 1;
        let n = self.n as f64;
        let mut delta = [0.0; K];
        for k in 0..K {
            delta[k] = x[k] - self.mean[k];
            self.mean[k] += delta[k] / n;
        }
        for i in 0..K {
            for j in 0..K {
                self.comoment[i][j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn merge(&mut self, other: &Moments<K>) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let mut delta = [0.0; K];
        for k in 0..K {
            delta[k] = other.mean[k] - self.mean[k];
        }
        for i in 0..K {
            for j in 0..K {
                self.comoment[i][j] += other.comoment[i][j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for k in 0..K {
            self.mean[k] += delta[k] * nb / n;
        }
        self.n += other.n;
    }

    /// Sample covariance of observables `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.comoment[i][j] / (self.n - 1) as f64
        }
    }

    /// Covariance of the sample means of observables `i` and `j`.
    pub fn mean_covariance(&self, i: usize, j: usize) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.covariance(i, j) / self.n as f64
        }
    }

    pub fn stderr(&self, k: usize) -> f64 {
        self.mean_covariance(k, k).max(0.0).sqrt()
    }
}

/// Averages `sample` over `samples` draws using block-wise RNG streams.
pub fn sample_moments<const K: usize, F>(samples: u64, seed: u64, sample: F) -> Moments<K>
where
    F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync,
{
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let partial: Vec<Moments<K>> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = stream_rng(seed, block);
            let start = block * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(samples);
            let mut acc = Moments::<K>::default();
            for _ in start..end {
                acc.push(sample(&mut rng));
            }
            acc
        })
        .collect();
    let mut total = Moments::<K>::default();
    for m in &partial {
        total.merge(m);
    }
    total
}

/// Scalar convenience wrapper around [`sample_moments`].
pub fn sample_mean<F>(samples: u64, seed: u64, sample: F) -> MCEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let m = sample_moments::<1, _>(samples, seed, |rng| [sample(rng)]);
    MCEstimate {
        value: m.mean[0],
        stderr: m.stderr(0),
        samples,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<[f64; 2]> = (0..100)
            .map(|i| {
                let t = i as f64;
                [t.sin(), t.cos() * 3.0]
            })
            .collect();
        let mut seq = Moments::<2>::default();
        xs.iter().for_each(|x| seq.push(*x));
        let mut a = Moments::<2>::default();
        let mut b = Moments::<2>::default();
        xs[..37].iter().for_each(|x| a.push(*x));
        xs[37..].iter().for_each(|x| b.push(*x));
        a.merge(&b);
        for i in 0..2 {
            assert!((a.mean[i] - seq.mean[i]).abs() < 1e-12);
            for j in 0..2 {
                assert!((a.comoment[i][j] - seq.comoment[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn uniform_mean_is_half() {
        let est = sample_mean(100_000, 7, |rng| rng.gen::<f64>());
        assert!((est.value - 0.5).abs() < 4.0 * est.stderr);
        let expected_stderr = (1.0f64 / 12.0 / 100_000.0).sqrt();
        assert!((est.stderr / expected_stderr - 1.0).abs() < 0.05);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let f = |rng: &mut ChaCha8Rng| rng.gen::<f64>().powi(2);
        let a = sample_mean(50_000, 11, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_mean(50_000, 11, f));
        assert_eq!(a, b);
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(z_score(1.0, 0.0, 1.0, 0.0), 0.0);
        assert!(z_score(1.0, 0.0, 2.0, 0.0).is_infinite());
        assert!((z_score(1.0, 0.3, 2.0, 0.4) - 2.0).abs() < 1e-12);
    }
}
