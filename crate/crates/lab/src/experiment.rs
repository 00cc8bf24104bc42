//! Seeded repetitions run in parallel and reduced in repetition order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use csb_core::environment::{run_episode_with, EpisodeOptions};
use csb_core::knapsack::oracle_allocation;
use csb_core::primitives::POLICY_STREAM;
use csb_core::{derive_stream, Allocation};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CSB_WORKERS";

/// Normal-approximation 95% interval: `(mean, 1.96 * sd / sqrt(n))` with the
/// sample standard deviation.
pub fn confidence_interval(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(LabError::TooFewSamples(n));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    Ok((mean, 1.96 * var.sqrt() / nf.sqrt()))
}

/// Mean and standard error.
pub fn mean_and_stderr(samples: &[f64]) -> Result<(f64, f64)> {
    confidence_interval(samples).map(|(m, h)| (m, h / 1.96))
}

/// `CSB_WORKERS` if set to a positive integer, else the available cores.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n >= 1)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

/// What one repetition contributes to the aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub seed: u64,
    /// Cumulative regret at each logged round.
    pub logged: Vec<f64>,
    pub final_regret: f64,
    pub rounds_to_lock: Option<u64>,
    pub regret_at_lock: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub rounds: Vec<u64>,
    pub mean_regret: Vec<f64>,
    /// 95% normal-approximation half-widths; 0 for a single repetition.
    pub ci_halfwidth: Vec<f64>,
    pub per_run_final: Vec<f64>,
    pub rounds_to_lock: Vec<Option<u64>>,
    pub regret_at_lock: Vec<Option<f64>>,
}

impl AggregateResult {
    /// Mean cumulative regret at a logged round.
    pub fn mean_at(&self, round: u64) -> Option<f64> {
        self.rounds
            .binary_search(&round)
            .ok()
            .map(|i| self.mean_regret[i])
    }

    pub fn final_mean(&self) -> f64 {
        self.mean_regret.last().copied().unwrap_or(0.0)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult> {
    run_resolved(&config.resolve()?, default_workers())
}

/// Runs every repetition of `exp` on up to `workers` threads. Repetition
/// `r` uses master seed `master_seed + r`; results do not depend on
/// `workers`.
pub fn run_resolved(exp: &Experiment, workers: usize) -> Result<AggregateResult> {
    let opt = oracle_allocation(&exp.spec.instance)?;
    let summaries = map_repetitions(exp.repetitions, workers, |r| run_one(exp, &opt, r))?;
    aggregate(exp.logged_rounds(), &summaries)
}

fn run_one(exp: &Experiment, opt: &Allocation, rep: usize) -> Result<EpisodeSummary> {
    let seed = exp.master_seed.wrapping_add(rep as u64);
    let mut policy = exp
        .policy
        .build(&exp.spec, derive_stream(seed, POLICY_STREAM))?;
    let trace = run_episode_with(
        &exp.spec.instance,
        opt,
        &mut policy,
        exp.horizon,
        seed,
        EpisodeOptions::default(),
    )?;
    Ok(EpisodeSummary {
        seed,
        logged: exp
            .logged_rounds()
            .iter()
            .map(|&t| trace.regret_at(t))
            .collect(),
        final_regret: trace.final_regret(),
        rounds_to_lock: trace.rounds_to_threshold_lock,
        regret_at_lock: trace.rounds_to_threshold_lock.map(|t| trace.regret_at(t)),
    })
}

/// Evaluates `job(0..count)` on a scoped thread pool and returns the results
/// in index order. The first error by index wins.
pub fn map_repetitions<T, F>(count: usize, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..count).map(|_| None).collect());
    let workers = workers.clamp(1, count.max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = job(i);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|slot| slot.expect("every index is claimed by a worker"))
        .collect()
}

pub fn aggregate(rounds: Vec<u64>, runs: &[EpisodeSummary]) -> Result<AggregateResult> {
    let mut mean_regret = Vec::with_capacity(rounds.len());
    let mut ci_halfwidth = Vec::with_capacity(rounds.len());
    let mut column = Vec::with_capacity(runs.len());
    for i in 0..rounds.len() {
        column.clear();
        column.extend(runs.iter().map(|r| r.logged[i]));
        let (m, h) = match column.len() {
            0 => return Err(LabError::TooFewSamples(0)),
            1 => (column[0], 0.0),
            _ => confidence_interval(&column)?,
        };
        mean_regret.push(m);
        ci_halfwidth.push(h);
    }
    Ok(AggregateResult {
        rounds,
        mean_regret,
        ci_halfwidth,
        per_run_final: runs.iter().map(|r| r.final_regret).collect(),
        rounds_to_lock: runs.iter().map(|r| r.rounds_to_lock).collect(),
        regret_at_lock: runs.iter().map(|r| r.regret_at_lock).collect(),
    })
}
