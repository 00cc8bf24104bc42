//! Seeded random streams and the two samplers every stochastic component uses.
//!
//! A stream is a ChaCha8 generator keyed by a master seed and positioned on one
//! of its 2^64 independent streams, so `(seed, stream_id)` fully determines the
//! draw sequence on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{CsbError, Result};

/// Stream id for the environment's latent Bernoulli draws.
pub const ENVIRONMENT_STREAM: u64 = 0;
/// Stream id for a policy's posterior samples.
pub const POLICY_STREAM: u64 = 1;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

pub fn derive_stream(master_seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    RngStream {
        seed: master_seed,
        stream_id,
        rng,
    }
}

impl RngStream {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// One uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Returns `true` with probability `p`, consuming exactly one uniform draw.
pub fn sample_bernoulli(p: f64, rng: &mut RngStream) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CsbError::InvalidProbability(p));
    }
    Ok(rng.uniform() < p)
}

/// Exact Beta(s, f) draw (Cheng's BB/BC rejection samplers), clamped into the
/// open unit interval.
pub fn sample_beta(successes: u64, failures: u64, rng: &mut RngStream) -> Result<f64> {
    if successes < 1 || failures < 1 {
        return Err(CsbError::InvalidBetaCounts {
            successes,
            failures,
        });
    }
    let beta =
        Beta::new(successes as f64, failures as f64).map_err(|_| CsbError::InvalidBetaCounts {
            successes,
            failures,
        })?;
    let x: f64 = beta.sample(rng);
    Ok(x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn same_seed_and_stream_replay() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn golden_stream_42_7() {
        // Recorded from the first build; guards against silent changes in the
        // generator or its seeding.
        let mut rng = derive_stream(42, 7);
        let draws: Vec<u64> = (0..10).map(|_| rng.next_u64()).collect();
        assert_eq!(draws, GOLDEN_42_7);
    }

    const GOLDEN_42_7: [u64; 10] = [
        2370525664269707216,
        6019739031913071421,
        11352947354031309824,
        9109578469052101476,
        7243313879750256913,
        4062747356348347385,
        4162815495977061980,
        4639319543949580345,
        5485096678941955847,
        8028547261872159686,
    ];

    #[test]
    fn bernoulli_degenerate_and_range() {
        let mut rng = derive_stream(1, 0);
        for _ in 0..1000 {
            assert!(!sample_bernoulli(0.0, &mut rng).unwrap());
            assert!(sample_bernoulli(1.0, &mut rng).unwrap());
        }
        assert!(sample_bernoulli(-0.1, &mut rng).is_err());
        assert!(sample_bernoulli(1.5, &mut rng).is_err());
        assert!(sample_bernoulli(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn bernoulli_consumes_one_draw() {
        let mut a = derive_stream(9, 3);
        let mut b = derive_stream(9, 3);
        sample_bernoulli(0.4, &mut a).unwrap();
        b.uniform();
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn bernoulli_mean_within_clt_bound() {
        let mut rng = derive_stream(2024, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_bernoulli(0.3, &mut rng).unwrap())
            .count();
        let mean = hits as f64 / n as f64;
        let tol = 3.0 * libm::sqrt(0.3 * 0.7 / n as f64);
        assert!((mean - 0.3).abs() < tol, "mean {mean}");
    }

    #[test]
    fn beta_rejects_zero_counts() {
        let mut rng = derive_stream(1, 1);
        assert!(sample_beta(0, 1, &mut rng).is_err());
        assert!(sample_beta(1, 0, &mut rng).is_err());
    }

    #[test]
    fn beta_uniform_mean() {
        let mut rng = derive_stream(5, 1);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_beta(1, 1, &mut rng).unwrap())
            .collect();
        let (mean, _) = moments(&xs);
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn beta_skewed_mean() {
        let mut rng = derive_stream(6, 1);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_beta(9, 1, &mut rng).unwrap())
            .collect();
        let (mean, _) = moments(&xs);
        assert!((mean - 0.9).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn beta_symmetric_variance() {
        // Var Beta(2,2) = ab / ((a+b)^2 (a+b+1)) = 4 / (16 * 5) = 0.05
        let mut rng = derive_stream(7, 1);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_beta(2, 2, &mut rng).unwrap())
            .collect();
        let (_, var) = moments(&xs);
        assert!((var - 0.05).abs() < 0.005, "var {var}");
    }

    #[test]
    fn beta_moments_within_five_standard_errors() {
        let n = 100_000usize;
        for (s, f) in [(1u64, 1u64), (3, 7), (40, 2), (1, 25), (500, 500)] {
            let mut rng = derive_stream(s * 1000 + f, 1);
            let xs: Vec<f64> = (0..n)
                .map(|_| sample_beta(s, f, &mut rng).unwrap())
                .collect();
            let (a, b) = (s as f64, f as f64);
            let mean = a / (a + b);
            let var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
            let (m, _) = moments(&xs);
            assert!(
                (m - mean).abs() < 5.0 * libm::sqrt(var / n as f64),
                "Beta({s},{f}) mean {m}"
            );
        }
    }

    #[test]
    fn beta_stays_open() {
        let mut rng = derive_stream(8, 1);
        for (s, f) in [(1u64, 1u64), (1, 100_000), (100_000, 1), (1, 2)] {
            for _ in 0..10_000 {
                let x = sample_beta(s, f, &mut rng).unwrap();
                assert!(x > 0.0 && x < 1.0);
            }
        }
    }
}
