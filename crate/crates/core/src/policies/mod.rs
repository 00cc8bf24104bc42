//! Learning policies as select/update state machines.
//!
//! Policies are built from a [`PublicView`](crate::PublicView) and their own
//! random stream; they never see the instance's means or thresholds. Every
//! search move is appended to an event log so tests can audit the branches
//! taken.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::environment::FeedbackVector;
use crate::error::{check_range, CsbError, Result};
use crate::model::{Allocation, Mode, PublicView};

mod anytime;
mod baselines;
mod multi_threshold;
mod posterior;
mod same_threshold;

pub use anytime::{AnytimeMultiConfig, CsbDu, CsbSu};
pub use baselines::{FixedAllocation, MpTs};
pub use multi_threshold::{KnownMultiThreshold, MultiThresholdConfig};
pub use posterior::BetaPosterior;
pub use same_threshold::{KnownSameThreshold, SameThresholdConfig};

/// Rounds between knapsack re-solves once thresholds are locked.
pub const DEFAULT_RESOLVE_CADENCE: usize = 20;

pub trait Policy {
    fn name(&self) -> &'static str;

    /// Allocation for round `round` (1-based).
    fn select(&mut self, round: u64) -> Result<Allocation>;

    /// Feedback for the allocation returned by the last `select`.
    fn update(&mut self, feedback: &FeedbackVector) -> Result<()>;

    /// `Some(true)` once a known-horizon search has committed to its
    /// thresholds; `None` for policies that cannot tell.
    fn locked(&self) -> Option<bool> {
        None
    }

    /// Current per-arm threshold estimate, when the policy keeps one.
    fn threshold_estimate(&self) -> Option<Vec<f64>> {
        None
    }

    /// Grid width the policy searches thresholds on.
    fn tolerance(&self) -> Option<f64> {
        None
    }

    fn events(&self) -> &[SearchEvent] {
        &[]
    }

    fn posterior(&self) -> Option<&BetaPosterior> {
        None
    }
}

impl<P: Policy + ?Sized> Policy for alloc::boxed::Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn select(&mut self, round: u64) -> Result<Allocation> {
        (**self).select(round)
    }
    fn update(&mut self, feedback: &FeedbackVector) -> Result<()> {
        (**self).update(feedback)
    }
    fn locked(&self) -> Option<bool> {
        (**self).locked()
    }
    fn threshold_estimate(&self) -> Option<Vec<f64>> {
        (**self).threshold_estimate()
    }
    fn tolerance(&self) -> Option<f64> {
        (**self).tolerance()
    }
    fn events(&self) -> &[SearchEvent] {
        (**self).events()
    }
    fn posterior(&self) -> Option<&BetaPosterior> {
        (**self).posterior()
    }
}

/// What caused a search move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trigger {
    /// A loss (loss mode) or reward (reward mode) was observed.
    Feedback,
    /// The waiting budget ran out without feedback.
    Silence,
}

/// Which end of the search interval moved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Lower end raised: the estimate goes up.
    Up,
    /// Upper end lowered: the estimate goes down.
    Down,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchEvent {
    Move {
        round: u64,
        /// `None` for searches shared by all arms.
        arm: Option<usize>,
        trigger: Trigger,
        direction: Direction,
        /// Candidate the search moves to next.
        next: f64,
    },
    Lock {
        round: u64,
        arm: Option<usize>,
        estimate: f64,
    },
}

pub(crate) fn require_mode(view: &PublicView, policy: &'static str, mode: Mode) -> Result<()> {
    if view.mode == mode {
        Ok(())
    } else {
        Err(CsbError::ModeMismatch {
            policy,
            mode: view.mode,
        })
    }
}

/// Arm indices ordered by descending score, lower index first on ties.
pub(crate) fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

pub(crate) fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx = ranked(scores);
    idx.truncate(k);
    idx
}

fn check_confidence(delta: f64, epsilon: f64) -> Result<()> {
    check_range("delta", delta, delta > 0.0 && delta < 1.0, "0 < delta < 1")?;
    check_range(
        "epsilon",
        epsilon,
        epsilon > 0.0 && epsilon < 1.0,
        "0 < epsilon < 1",
    )
}

fn ceil_budget(raw: f64) -> u64 {
    (libm::ceil(raw) as u64).max(1)
}

/// Unrounded same-threshold waiting budget `ln(log2 K / delta) / ln(1 / (1 - epsilon))`.
pub fn w_delta_same_raw(arms: usize, delta: f64, epsilon: f64) -> Result<f64> {
    if arms < 2 {
        return Err(CsbError::OutOfRange {
            name: "K",
            value: arms as f64,
            expected: "K >= 2",
        });
    }
    check_confidence(delta, epsilon)?;
    Ok(libm::log(libm::log2(arms as f64) / delta) / libm::log(1.0 / (1.0 - epsilon)))
}

/// Consecutive no-loss rounds before a same-threshold candidate is declared
/// an overestimate.
pub fn w_delta_same(arms: usize, delta: f64, epsilon: f64) -> Result<u64> {
    w_delta_same_raw(arms, delta, epsilon).map(ceil_budget)
}

/// Number of points on the search grid, `ceil(1 + Q / gamma)`.
pub(crate) fn grid_points(budget: f64, gamma: f64) -> f64 {
    libm::ceil(1.0 + budget / gamma - crate::model::GRID_TOL)
}

/// Unrounded multi-threshold waiting budget
/// `ln(K log2 ceil(1 + Q / gamma) / delta) / ln(1 / (1 - epsilon))`.
pub fn w_delta_multi_raw(
    arms: usize,
    delta: f64,
    epsilon: f64,
    budget: f64,
    gamma: f64,
) -> Result<f64> {
    if arms == 0 {
        return Err(CsbError::NoArms);
    }
    check_confidence(delta, epsilon)?;
    check_range("Q", budget, budget > 0.0, "Q > 0")?;
    check_range("gamma", gamma, gamma > 0.0, "gamma > 0")?;
    let searches = arms as f64 * libm::log2(grid_points(budget, gamma));
    Ok(libm::log(searches / delta) / libm::log(1.0 / (1.0 - epsilon)))
}

pub fn w_delta_multi(
    arms: usize,
    delta: f64,
    epsilon: f64,
    budget: f64,
    gamma: f64,
) -> Result<u64> {
    w_delta_multi_raw(arms, delta, epsilon, budget, gamma).map(ceil_budget)
}
