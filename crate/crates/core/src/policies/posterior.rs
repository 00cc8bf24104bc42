use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::primitives::{sample_beta, RngStream};

/// Per-arm Beta(S, F) counts plus the pending no-loss counters `Z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaPosterior {
    successes: Vec<u64>,
    failures: Vec<u64>,
    pending: Vec<u64>,
}

impl BetaPosterior {
    pub fn new(arms: usize) -> Self {
        Self {
            successes: vec![1; arms],
            failures: vec![1; arms],
            pending: vec![0; arms],
        }
    }

    pub fn arms(&self) -> usize {
        self.successes.len()
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    pub fn failures(&self) -> &[u64] {
        &self.failures
    }

    pub fn pending(&self) -> &[u64] {
        &self.pending
    }

    /// One sample per arm, drawn in arm order.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        for (&s, &f) in self.successes.iter().zip(&self.failures) {
            out.push(sample_beta(s, f, rng)?);
        }
        Ok(())
    }

    /// `S += x, F += 1 - x`.
    pub fn observe(&mut self, arm: usize, loss: bool) {
        if loss {
            self.successes[arm] += 1;
        } else {
            self.failures[arm] += 1;
        }
    }

    pub fn add_successes(&mut self, arm: usize, n: u64) {
        self.successes[arm] += n;
    }

    pub fn add_failures(&mut self, arm: usize, n: u64) {
        self.failures[arm] += n;
    }

    pub fn bump_pending(&mut self, arm: usize) -> u64 {
        self.pending[arm] += 1;
        self.pending[arm]
    }

    /// Moves `Z_i` into `F_i` and clears it.
    pub fn flush_pending(&mut self, arm: usize) {
        self.failures[arm] += core::mem::take(&mut self.pending[arm]);
    }

    pub fn clear_pending(&mut self, arm: usize) {
        self.pending[arm] = 0;
    }

    pub fn clear_all_pending(&mut self) {
        self.pending.iter_mut().for_each(|z| *z = 0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::derive_stream;

    #[test]
    fn starts_uniform() {
        let p = BetaPosterior::new(3);
        assert_eq!(p.successes(), &[1, 1, 1]);
        assert_eq!(p.failures(), &[1, 1, 1]);
        assert_eq!(p.pending(), &[0, 0, 0]);
    }

    #[test]
    fn pending_flows_into_failures() {
        let mut p = BetaPosterior::new(2);
        p.bump_pending(0);
        assert_eq!(p.bump_pending(0), 2);
        p.flush_pending(0);
        assert_eq!(p.failures(), &[3, 1]);
        assert_eq!(p.pending(), &[0, 0]);
        p.observe(1, true);
        p.observe(1, false);
        assert_eq!(p.successes(), &[1, 2]);
        assert_eq!(p.failures(), &[3, 2]);
    }

    #[test]
    fn sampling_is_replayable() {
        let p = BetaPosterior::new(4);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        p.sample_into(&mut derive_stream(3, 1), &mut a).unwrap();
        p.sample_into(&mut derive_stream(3, 1), &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }
}
