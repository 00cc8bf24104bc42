//! The interaction protocol: latent Bernoulli draws, threshold censoring and
//! expected-gap regret accounting.

use alloc::vec::Vec;

use crate::error::Result;
use crate::knapsack::oracle_allocation;
use crate::model::{
    check_feasible, in_tolerance_interval, per_round_regret, same_threshold_equivalent, Allocation,
    CsbInstance, Mode, GRID_TOL,
};
use crate::policies::{Policy, SearchEvent};
use crate::primitives::{derive_stream, sample_bernoulli, RngStream, ENVIRONMENT_STREAM};

/// What the learner sees after one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeedbackVector {
    /// Observed loss (reward) indicators; 0 wherever censored.
    pub y: Vec<bool>,
    /// `true` where the arm's draw was visible.
    pub observed: Vec<bool>,
}

/// Draws `X_i ~ Bernoulli(mu_i)` for every arm in index order, then censors.
pub fn env_step(
    instance: &CsbInstance,
    alloc: &Allocation,
    rng: &mut RngStream,
) -> Result<FeedbackVector> {
    check_feasible(instance, alloc)?;
    let k = instance.arms();
    let mut y = Vec::with_capacity(k);
    let mut observed = Vec::with_capacity(k);
    for ((&mu, funded), _) in instance.mu().iter().zip(instance.funded(alloc)).zip(0..k) {
        let x = sample_bernoulli(mu, rng)?;
        let visible = match instance.mode() {
            Mode::Loss => !funded,
            Mode::Reward => funded,
        };
        y.push(x && visible);
        observed.push(visible);
    }
    Ok(FeedbackVector { y, observed })
}

/// Result of one seeded episode.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretTrace {
    pub horizon: u64,
    /// Entry `t - 1` is the expected regret summed over rounds `1..=t`.
    pub cumulative_regret: Vec<f64>,
    /// First round after which the policy's threshold estimate was final
    /// (known-horizon policies) or allocation equivalent (anytime policies).
    pub rounds_to_threshold_lock: Option<u64>,
    /// Threshold estimate at the lock round.
    pub estimate_at_lock: Option<Vec<f64>>,
    pub per_round_allocations: Option<Vec<Allocation>>,
    pub master_seed: u64,
    pub events: Vec<SearchEvent>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    /// Cumulative regret after round `t` (1-based); 0 for `t = 0`.
    pub fn regret_at(&self, t: u64) -> f64 {
        match t {
            0 => 0.0,
            t => self.cumulative_regret[(t - 1) as usize],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EpisodeOptions {
    pub record_allocations: bool,
}

/// Runs `horizon` rounds against the oracle allocation.
pub fn run_episode(
    instance: &CsbInstance,
    policy: &mut dyn Policy,
    horizon: u64,
    master_seed: u64,
) -> Result<RegretTrace> {
    let opt = oracle_allocation(instance)?;
    run_episode_with(
        instance,
        &opt,
        policy,
        horizon,
        master_seed,
        EpisodeOptions::default(),
    )
}

/// [`run_episode`] with a precomputed optimal allocation.
pub fn run_episode_with(
    instance: &CsbInstance,
    opt: &Allocation,
    policy: &mut dyn Policy,
    horizon: u64,
    master_seed: u64,
    options: EpisodeOptions,
) -> Result<RegretTrace> {
    crate::error::check_range("T", horizon as f64, horizon >= 1, "T >= 1")?;
    let mut env_rng = derive_stream(master_seed, ENVIRONMENT_STREAM);
    let lock = LockCheck::new(instance)?;
    let mut cumulative = Vec::with_capacity(horizon as usize);
    let mut allocations = options.record_allocations.then(Vec::new);
    let mut total = 0.0;
    let mut lock_round = None;
    let mut estimate_at_lock = None;
    for t in 1..=horizon {
        let alloc = policy.select(t)?;
        let feedback = env_step(instance, &alloc, &mut env_rng)?;
        total += per_round_regret(instance, &alloc, opt)?;
        cumulative.push(total);
        policy.update(&feedback)?;
        if let Some(log) = allocations.as_mut() {
            log.push(alloc);
        }
        if lock_round.is_none() && lock.reached(instance, policy)? {
            lock_round = Some(t);
            estimate_at_lock = policy.threshold_estimate();
        }
    }
    Ok(RegretTrace {
        horizon,
        cumulative_regret: cumulative,
        rounds_to_threshold_lock: lock_round,
        estimate_at_lock,
        per_round_allocations: allocations,
        master_seed,
        events: policy.events().to_vec(),
    })
}

struct LockCheck {
    same: Option<(f64, usize)>,
}

impl LockCheck {
    fn new(instance: &CsbInstance) -> Result<Self> {
        let same = match instance.common_threshold() {
            Some(theta_s) => {
                let (m, _) =
                    same_threshold_equivalent(theta_s, instance.arms(), instance.budget())?;
                Some((theta_s, m))
            }
            None => None,
        };
        Ok(Self { same })
    }

    fn reached(&self, instance: &CsbInstance, policy: &dyn Policy) -> Result<bool> {
        if let Some(locked) = policy.locked() {
            return Ok(locked);
        }
        let Some(est) = policy.threshold_estimate() else {
            return Ok(false);
        };
        if let Some((theta_s, m)) = self.same {
            let first = est[0];
            if est.iter().any(|&e| e != first) || first < theta_s - GRID_TOL {
                return Ok(false);
            }
            let fundable =
                (libm::floor(instance.budget() / first + GRID_TOL) as usize).min(instance.arms());
            return Ok(fundable == m);
        }
        let Some(gamma) = policy.tolerance() else {
            return Ok(false);
        };
        for (&e, &theta) in est.iter().zip(instance.theta()) {
            if !in_tolerance_interval(e, theta, gamma)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
