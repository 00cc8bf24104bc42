use alloc::vec;
use alloc::vec::Vec;

use super::{require_mode, top_k, BetaPosterior, Policy};
use crate::environment::FeedbackVector;
use crate::error::{check_range, Result};
use crate::knapsack::oracle_allocation;
use crate::model::{Allocation, CsbInstance, Mode, PublicView};
use crate::primitives::RngStream;

/// Plays the same allocation every round and learns nothing.
#[derive(Clone, Debug)]
pub struct FixedAllocation {
    name: &'static str,
    alloc: Allocation,
}

impl FixedAllocation {
    pub fn new(alloc: Allocation) -> Self {
        Self {
            name: "fixed",
            alloc,
        }
    }

    /// The regret baseline: replays the optimal allocation. Needs the full
    /// instance, so it is for reference runs only.
    pub fn oracle(instance: &CsbInstance) -> Result<Self> {
        Ok(Self {
            name: "oracle",
            alloc: oracle_allocation(instance)?,
        })
    }

    /// `Q / K` to every arm.
    pub fn uniform(view: PublicView) -> Self {
        Self {
            name: "uniform",
            alloc: Allocation::from_raw(vec![view.budget / view.arms as f64; view.arms]),
        }
    }
}

impl Policy for FixedAllocation {
    fn name(&self) -> &'static str {
        self.name
    }

    fn select(&mut self, _round: u64) -> Result<Allocation> {
        Ok(self.alloc.clone())
    }

    fn update(&mut self, _feedback: &FeedbackVector) -> Result<()> {
        Ok(())
    }
}

/// Multiple-play Thompson sampling for losses: observe the `m` arms with the
/// smallest sampled means and shield the other `K - m` with `Q / (K - m)` each.
#[derive(Clone, Debug)]
pub struct MpTs {
    view: PublicView,
    observed: usize,
    posterior: BetaPosterior,
    rng: RngStream,
    samples: Vec<f64>,
    shielded: Vec<bool>,
}

impl MpTs {
    pub fn new(view: PublicView, observed: usize, rng: RngStream) -> Result<Self> {
        Self::from_state(view, observed, BetaPosterior::new(view.arms), rng)
    }

    /// Continues from an existing posterior and random stream.
    pub fn from_state(
        view: PublicView,
        observed: usize,
        posterior: BetaPosterior,
        rng: RngStream,
    ) -> Result<Self> {
        require_mode(&view, "mp-ts", Mode::Loss)?;
        check_range("m", observed as f64, observed < view.arms, "m < K")?;
        Ok(Self {
            view,
            observed,
            samples: Vec::with_capacity(view.arms),
            shielded: vec![false; view.arms],
            posterior,
            rng,
        })
    }

    /// Arms whose losses are observed this round, ascending.
    pub fn observed_set(&self) -> Vec<usize> {
        (0..self.view.arms).filter(|&i| !self.shielded[i]).collect()
    }
}

impl Policy for MpTs {
    fn name(&self) -> &'static str {
        "mp-ts"
    }

    fn select(&mut self, _round: u64) -> Result<Allocation> {
        self.posterior
            .sample_into(&mut self.rng, &mut self.samples)?;
        let funded = self.view.arms - self.observed;
        let chosen = top_k(&self.samples, funded);
        self.shielded.iter_mut().for_each(|b| *b = false);
        for &i in &chosen {
            self.shielded[i] = true;
        }
        Ok(Allocation::uniform_on(
            self.view.arms,
            &chosen,
            self.view.budget / funded as f64,
        ))
    }

    fn update(&mut self, feedback: &FeedbackVector) -> Result<()> {
        for i in 0..self.view.arms {
            if !self.shielded[i] {
                self.posterior.observe(i, feedback.y[i]);
            }
        }
        Ok(())
    }

    fn posterior(&self) -> Option<&BetaPosterior> {
        Some(&self.posterior)
    }
}
