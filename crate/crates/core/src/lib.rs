//! Censored semi-bandit resource allocation.
//!
//! A learner splits a divisible budget `Q` across `K` arms each round. Arm `i`
//! draws a Bernoulli loss with mean `mu[i]`; the loss is hidden (and avoided)
//! whenever the arm receives at least its threshold `theta[i]`. In reward mode
//! the censoring flips: a reward is only collected and observed at or above
//! the threshold.
//!
//! The crate is `no_std` + `alloc`. It holds the instance model, the exact
//! 0-1 knapsack oracle, the interaction protocol, the learning policies and
//! the closed-form bound evaluators. File formats, the experiment runner and
//! the CLI live in the `csb-lab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod environment;
mod error;
pub mod knapsack;
pub mod model;
pub mod policies;
pub mod primitives;

pub use environment::{env_step, run_episode, FeedbackVector, RegretTrace};
pub use error::{CsbError, Result};
pub use knapsack::{
    optimal_allocation, oracle_allocation, solve_bruteforce, solve_dp, KnapsackSolution,
};
pub use model::{Allocation, CsbInstance, GapSummary, Mode, PublicView, FEASIBILITY_TOL};
pub use policies::Policy;
pub use primitives::{derive_stream, sample_bernoulli, sample_beta, RngStream};
