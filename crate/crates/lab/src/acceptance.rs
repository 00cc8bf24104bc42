//! The acceptance suite: thirteen checks covering the knapsack oracle, the
//! equivalence results, the round and regret bounds, long-run regret trends, the
//! reward-mode mirror policies and reproducibility.
//!
//! Every check is seeded; the suite's verdicts are a pure function of the
//! code. Checks that share experiments (sub-linear regret and the log-term
//! comparison) compute them once.

use std::cell::OnceCell;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use csb_core::bounds::{expected_rounds_csb_du, expected_rounds_csb_su, regret_bound_csb_sk};
use csb_core::environment::{env_step, run_episode_with, EpisodeOptions, RegretTrace};
use csb_core::knapsack::{optimal_allocation, oracle_allocation, DEFAULT_SCALE};
use csb_core::model::{
    gap_summary, in_tolerance_interval, is_allocation_equivalent, residual_gamma,
    same_threshold_equivalent, tolerance_upper,
};
use csb_core::policies::{
    w_delta_same, Direction, KnownMultiThreshold, KnownSameThreshold, MpTs, SameThresholdConfig,
    SearchEvent, Trigger,
};
use csb_core::primitives::{ENVIRONMENT_STREAM, POLICY_STREAM};
use csb_core::{
    derive_stream, solve_bruteforce, solve_dp, Allocation, CsbInstance, Mode, Policy, RngStream,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::experiment::{map_repetitions, mean_and_stderr, run_resolved, AggregateResult};
use crate::instance::{InstanceSpec, Preset};
use crate::output::{render_run, write_file, Format};
use crate::policy::PolicyKind;

/// Master seed for every randomized check.
pub const SUITE_SEED: u64 = 20_240_101;
const LONG_HORIZON: u64 = 100_000;
const MID_HORIZON: u64 = 10_000;
const SEEDS: usize = 100;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    /// `PASS [ 1] title: detail (1.2s)`.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Clone, Debug)]
pub struct AcceptanceOptions {
    pub workers: usize,
    /// Where the reproducibility check writes its files.
    pub scratch_dir: PathBuf,
    /// Check ids to run; empty runs all.
    pub only: Vec<u8>,
}

type Check = fn(&Suite) -> Result<(bool, String)>;

const CHECKS: [(u8, &str, Check); 13] = [
    (1, "knapsack dp matches brute force", knapsack_equivalence),
    (2, "three-arm optimal allocation", three_arm_allocation),
    (
        3,
        "common-threshold candidate is allocation equivalent",
        common_threshold_equivalence,
    ),
    (
        4,
        "tolerance-interval estimates are allocation equivalent",
        tolerance_interval_equivalence,
    ),
    (5, "csb-sk locks within its round bound", csb_sk_round_bound),
    (6, "csb-su expected rounds to lock", csb_su_expected_rounds),
    (
        7,
        "csb-du expected rounds to tolerance",
        csb_du_expected_rounds,
    ),
    (8, "sub-linear regret", sublinear_regret),
    (
        9,
        "csb-sk post-lock regret within the explicit bound",
        csb_sk_log_term,
    ),
    (10, "post-lock csb-sk replays mp-ts", mp_ts_trace_identity),
    (11, "regret increases with the budget", budget_trend),
    (12, "reward-mode policies", reward_mode_policies),
    (13, "byte-identical reruns", determinism),
];

/// Runs every check in order, reporting each as soon as it finishes.
pub fn run_all(options: &AcceptanceOptions, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let suite = Suite {
        options: options.clone(),
        loss_runs: OnceCell::new(),
    };
    CHECKS
        .iter()
        .filter(|(id, _, _)| options.only.is_empty() || options.only.contains(id))
        .map(|&(id, title, check)| {
            let start = Instant::now();
            let (passed, detail) = check(&suite).unwrap_or_else(|e| (false, format!("error: {e}")));
            let outcome = Outcome {
                id,
                title,
                passed,
                detail,
                elapsed: start.elapsed(),
            };
            report(&outcome);
            outcome
        })
        .collect()
}

struct Suite {
    options: AcceptanceOptions,
    loss_runs: OnceCell<Vec<LabeledRun>>,
}

struct LabeledRun {
    label: String,
    exp: Experiment,
    result: AggregateResult,
}

impl Suite {
    fn workers(&self) -> usize {
        self.options.workers
    }

    fn experiment(&self, cfg: &ExperimentConfig) -> Result<(Experiment, AggregateResult)> {
        let exp = cfg.resolve()?;
        let result = run_resolved(&exp, self.workers())?;
        Ok((exp, result))
    }

    /// Seeded episodes with full traces, for checks that need more than the
    /// aggregate.
    fn traces(
        &self,
        spec: &InstanceSpec,
        cfg: &ExperimentConfig,
        seeds: usize,
    ) -> Result<Vec<RegretTrace>> {
        let exp = cfg.resolve()?;
        let opt = oracle_allocation(&spec.instance)?;
        map_repetitions(seeds, self.workers(), |r| {
            let seed = exp.master_seed + r as u64;
            let mut policy = exp
                .policy
                .build(&exp.spec, derive_stream(seed, POLICY_STREAM))?;
            Ok(run_episode_with(
                &exp.spec.instance,
                &opt,
                &mut policy,
                exp.horizon,
                seed,
                EpisodeOptions::default(),
            )?)
        })
    }

    /// The six long loss-mode runs shared by the sub-linearity and log-term
    /// checks.
    fn loss_runs(&self) -> Result<&[LabeledRun]> {
        if let Some(runs) = self.loss_runs.get() {
            return Ok(runs);
        }
        let plan = [
            (PolicyKind::CsbSk, "I"),
            (PolicyKind::CsbSu, "I"),
            (PolicyKind::CsbMk, "III"),
            (PolicyKind::CsbMk, "IV"),
            (PolicyKind::CsbDu, "III"),
            (PolicyKind::CsbDu, "IV"),
        ];
        let mut runs = Vec::with_capacity(plan.len());
        for (kind, preset) in plan {
            let cfg = ExperimentConfig::new(preset, kind, LONG_HORIZON, SEEDS, SUITE_SEED);
            let (exp, result) = self.experiment(&cfg)?;
            runs.push(LabeledRun {
                label: format!("{kind}/{preset}"),
                exp,
                result,
            });
        }
        Ok(self.loss_runs.get_or_init(|| runs))
    }
}

fn rng(check: u64) -> RngStream {
    derive_stream(SUITE_SEED, 100 + check)
}

/// Uniform in `[lo, hi]` rounded to four decimals.
fn dec4(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    ((lo + (hi - lo) * rng.uniform()) * 1e4).round() / 1e4
}

fn below(rng: &mut RngStream, n: usize) -> usize {
    ((rng.uniform() * n as f64) as usize).min(n - 1)
}

fn scaled_sum(values: &[f64], selected: &[usize]) -> i64 {
    selected
        .iter()
        .map(|&i| (values[i] * 1e4).round() as i64)
        .sum()
}

fn knapsack_equivalence(_: &Suite) -> Result<(bool, String)> {
    let mut rng = rng(1);
    let start = Instant::now();
    let mut agree = 0;
    let trials = 500;
    for _ in 0..trials {
        let k = 1 + below(&mut rng, 15);
        let values: Vec<f64> = (0..k).map(|_| dec4(&mut rng, 0.0, 1.0)).collect();
        let weights: Vec<f64> = (0..k).map(|_| dec4(&mut rng, 0.0001, 1.0)).collect();
        let capacity = dec4(&mut rng, 0.0, weights.iter().sum());
        let brute = solve_bruteforce(&values, &weights, capacity)?;
        let dp = solve_dp(&values, &weights, capacity, DEFAULT_SCALE)?;
        if scaled_sum(&values, &brute.selected) == scaled_sum(&values, &dp.selected) {
            agree += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        agree == trials && secs < 60.0,
        format!("{agree}/{trials} optimal values equal, {secs:.2}s"),
    ))
}

fn three_arm_allocation(_: &Suite) -> Result<(bool, String)> {
    let inst = CsbInstance::new(vec![0.9, 0.6, 0.4], vec![0.6, 0.55, 0.45], 1.0, Mode::Loss)?;
    let a = optimal_allocation(&inst, DEFAULT_SCALE)?;
    Ok((
        a.as_slice() == [0.0, 0.55, 0.45],
        format!("{:?}", a.as_slice()),
    ))
}

fn common_threshold_equivalence(_: &Suite) -> Result<(bool, String)> {
    let mut rng = rng(3);
    let trials = 200;
    let mut ok = 0;
    for _ in 0..trials {
        let k = 1 + below(&mut rng, 10);
        let mu: Vec<f64> = (0..k).map(|_| dec4(&mut rng, 0.0, 1.0)).collect();
        let budget = dec4(&mut rng, 0.5, 5.0);
        let theta_s = dec4(&mut rng, 0.0001, budget).min(budget);
        let inst = CsbInstance::same_threshold(mu, theta_s, budget, Mode::Loss)?;
        let (_, theta_hat) = same_threshold_equivalent(theta_s, k, budget)?;
        if is_allocation_equivalent(&vec![theta_hat; k], &inst)? {
            ok += 1;
        }
    }
    Ok((ok == trials, format!("{ok}/{trials} equivalent")))
}

fn tolerance_interval_equivalence(_: &Suite) -> Result<(bool, String)> {
    let mut rng = rng(4);
    let instances = 1000;
    let mut checked = 0;
    let mut failures = 0;
    let mut redraws = 0;
    let mut accepted = 0;
    while accepted < instances {
        let k = 1 + below(&mut rng, 8);
        let budget = dec4(&mut rng, 0.5, 3.0);
        let mu: Vec<f64> = (0..k).map(|_| dec4(&mut rng, 0.0, 1.0)).collect();
        let theta: Vec<f64> = (0..k)
            .map(|_| dec4(&mut rng, 0.01, 1.0).min(budget))
            .collect();
        let inst = CsbInstance::new(mu, theta, budget, Mode::Loss)?;
        let gamma = residual_gamma(&inst, &oracle_allocation(&inst)?);
        if gamma <= 1e-9 {
            redraws += 1;
            continue;
        }
        accepted += 1;
        let uppers = inst
            .theta()
            .iter()
            .map(|&t| tolerance_upper(t, gamma))
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        for draw in 0..5 {
            let hat: Vec<f64> = inst
                .theta()
                .iter()
                .zip(&uppers)
                .map(|(&lo, &hi)| match draw {
                    0 => lo,
                    1 => hi,
                    _ => lo + (hi - lo) * rng.uniform(),
                })
                .collect();
            for (&h, &t) in hat.iter().zip(inst.theta()) {
                if !in_tolerance_interval(h, t, gamma)? {
                    return Err(LabError::invalid(
                        "theta_hat",
                        format!("{h} outside the interval around {t}"),
                    ));
                }
            }
            checked += 1;
            if !is_allocation_equivalent(&hat, &inst)? {
                failures += 1;
            }
        }
    }
    Ok((
        failures == 0,
        format!("{failures} failures over {checked} estimates on {instances} instances ({redraws} draws had gamma = 0)"),
    ))
}

/// Allocation equivalence for any arm count: exhaustive up to the brute-force
/// limit, exact scaled DP beyond it.
fn equivalent(theta_hat: &[f64], inst: &CsbInstance) -> Result<bool> {
    if inst.arms() <= csb_core::knapsack::BRUTEFORCE_LIMIT {
        return Ok(is_allocation_equivalent(theta_hat, inst)?);
    }
    let truth = solve_dp(inst.mu(), inst.theta(), inst.budget(), DEFAULT_SCALE)?;
    let guess = solve_dp(inst.mu(), theta_hat, inst.budget(), DEFAULT_SCALE)?;
    Ok((truth.total_value - guess.total_value).abs() <= 1e-9)
}

fn csb_sk_round_bound(suite: &Suite) -> Result<(bool, String)> {
    let spec = Preset::I.spec();
    let k = spec.instance.arms();
    let (delta, epsilon) = (1e-2, 0.1);
    let bound = (w_delta_same(k, delta, epsilon)? as f64 * (k as f64).log2()).ceil() as u64;
    let mut cfg = ExperimentConfig::new("I", PolicyKind::CsbSk, 2 * bound, SEEDS, SUITE_SEED);
    cfg.policy.delta = Some(delta);
    cfg.policy.epsilon = Some(epsilon);
    let traces = suite.traces(&spec, &cfg, SEEDS)?;
    let mut good = 0;
    let mut worst = 0;
    for tr in &traces {
        if let (Some(t), Some(est)) = (tr.rounds_to_threshold_lock, &tr.estimate_at_lock) {
            worst = worst.max(t);
            if t <= bound && equivalent(est, &spec.instance)? {
                good += 1;
            }
        }
    }
    Ok((
        good >= 99,
        format!("{good}/{SEEDS} locked on an equivalent estimate within {bound} rounds (slowest {worst})"),
    ))
}

fn lock_rounds(traces: &[RegretTrace]) -> (Vec<f64>, usize) {
    let unlocked = traces
        .iter()
        .filter(|t| t.rounds_to_threshold_lock.is_none())
        .count();
    let rounds = traces
        .iter()
        .map(|t| t.rounds_to_threshold_lock.unwrap_or(t.horizon) as f64)
        .collect();
    (rounds, unlocked)
}

fn csb_su_expected_rounds(suite: &Suite) -> Result<(bool, String)> {
    let spec = Preset::I.spec();
    let (m, _) = same_threshold_equivalent(0.5, spec.instance.arms(), spec.instance.budget())?;
    let bound = expected_rounds_csb_su(spec.instance.mu(), m)?;
    let seeds = 200;
    let cfg = ExperimentConfig::new("I", PolicyKind::CsbSu, 1000, seeds, SUITE_SEED);
    let (rounds, unlocked) = lock_rounds(&suite.traces(&spec, &cfg, seeds)?);
    let (mean, se) = mean_and_stderr(&rounds)?;
    Ok((
        unlocked == 0 && mean + 2.0 * se <= bound,
        format!(
            "mean {mean:.3} + 2 se {:.3} vs bound {bound:.3}; {unlocked} unlocked",
            2.0 * se
        ),
    ))
}

fn csb_du_expected_rounds(suite: &Suite) -> Result<(bool, String)> {
    let spec = Preset::III.spec();
    let gamma = 0.01;
    let bound = expected_rounds_csb_du(spec.instance.mu(), spec.instance.theta(), gamma)?;
    let mut cfg = ExperimentConfig::new("III", PolicyKind::CsbDu, 20_000, SEEDS, SUITE_SEED);
    cfg.policy.gamma = Some(gamma);
    let (rounds, unlocked) = lock_rounds(&suite.traces(&spec, &cfg, SEEDS)?);
    let (mean, se) = mean_and_stderr(&rounds)?;
    Ok((
        unlocked == 0 && mean <= bound + 2.0 * se,
        format!(
            "mean {mean:.1} vs bound {bound:.1} + 2 se {:.1}; {unlocked} never within tolerance",
            2.0 * se
        ),
    ))
}

fn regret_rate(result: &AggregateResult, t: u64) -> Result<f64> {
    result
        .mean_at(t)
        .map(|r| r / t as f64)
        .ok_or_else(|| LabError::invalid("log_stride", format!("round {t} not logged")))
}

fn sublinear_regret(suite: &Suite) -> Result<(bool, String)> {
    let mut all = true;
    let mut notes = Vec::new();
    for run in suite.loss_runs()? {
        let nabla_max = gap_summary(&run.exp.spec.instance)?.nabla_max;
        let late = regret_rate(&run.result, MID_HORIZON)?;
        let end = regret_rate(&run.result, LONG_HORIZON)?;
        let tail = (run.result.final_mean()
            - run
                .result
                .mean_at(LONG_HORIZON - MID_HORIZON)
                .unwrap_or(0.0))
            / MID_HORIZON as f64;
        let ok = end < 0.5 * late && tail < 0.05 * nabla_max;
        all &= ok;
        notes.push(format!(
            "{} R/T {:.4}->{:.4} tail {:.4}/{:.3}{}",
            run.label,
            late,
            end,
            tail,
            0.05 * nabla_max,
            if ok { "" } else { " FAIL" }
        ));
    }
    Ok((all, notes.join("; ")))
}

fn csb_sk_log_term(suite: &Suite) -> Result<(bool, String)> {
    let run = &suite.loss_runs()?[0];
    let inst = &run.exp.spec.instance;
    let (m, _) = same_threshold_equivalent(0.5, inst.arms(), inst.budget())?;
    let nabla_max = gap_summary(inst)?.nabla_max;
    let p = &run.exp.policy;
    let bound = regret_bound_csb_sk(
        nabla_max,
        inst.mu(),
        m,
        LONG_HORIZON as f64,
        p.delta,
        p.epsilon,
    )?;
    let post: Vec<f64> = run
        .result
        .per_run_final
        .iter()
        .zip(&run.result.regret_at_lock)
        .map(|(f, l)| f - l.unwrap_or(0.0))
        .collect();
    let mean = post.iter().sum::<f64>() / post.len() as f64;
    let limit = 3.0 * bound.explicit();
    Ok((
        mean <= limit,
        format!(
            "mean post-lock regret {mean:.1} vs 3 x ({:.1} search + {:.1} log T) = {limit:.1}",
            bound.search, bound.log_term
        ),
    ))
}

fn observed_arms(inst: &CsbInstance, a: &Allocation) -> Vec<usize> {
    inst.funded(a)
        .enumerate()
        .filter(|(_, f)| !f)
        .map(|(i, _)| i)
        .collect()
}

fn mp_ts_trace_identity(_: &Suite) -> Result<(bool, String)> {
    let inst = Preset::I.spec().instance;
    let view = inst.public_view();
    let k = inst.arms();
    let rounds = 1000;
    let seeds = 10;
    let mut matched = 0;
    for seed in SUITE_SEED..SUITE_SEED + seeds {
        let cfg = SameThresholdConfig {
            delta: 1.0 / LONG_HORIZON as f64,
            epsilon: 0.1,
        };
        let mut sk = KnownSameThreshold::csb_sk(view, cfg, derive_stream(seed, POLICY_STREAM))?;
        let mut env = derive_stream(seed, ENVIRONMENT_STREAM);
        let mut t = 0;
        while sk.locked() != Some(true) && t < LONG_HORIZON {
            t += 1;
            let a = sk.select(t)?;
            let fb = env_step(&inst, &a, &mut env)?;
            sk.update(&fb)?;
        }
        let funded = ((inst.budget() / sk.current_candidate() + 1e-9).floor() as usize).min(k);
        let posterior = sk.posterior().cloned().expect("csb-sk keeps a posterior");
        let mut mp = MpTs::from_state(view, k - funded, posterior, sk.rng().clone())?;
        let mut env_mp = env.clone();
        let mut same = 0;
        for s in 1..=rounds {
            let a = sk.select(t + s)?;
            let b = mp.select(t + s)?;
            if observed_arms(&inst, &a) != mp.observed_set() {
                break;
            }
            same += 1;
            let fa = env_step(&inst, &a, &mut env)?;
            let fb = env_step(&inst, &b, &mut env_mp)?;
            sk.update(&fa)?;
            mp.update(&fb)?;
        }
        if same == rounds {
            matched += 1;
        }
    }
    Ok((
        matched == seeds,
        format!("{matched}/{seeds} seeds matched for {rounds} consecutive post-lock rounds"),
    ))
}

fn budget_trend(suite: &Suite) -> Result<(bool, String)> {
    let mut all = true;
    let mut notes = Vec::new();
    for kind in [PolicyKind::CsbSk, PolicyKind::CsbSu] {
        let mut finals = Vec::new();
        for q in [5.0, 10.0, 15.0] {
            let mut cfg = ExperimentConfig::new("II", kind, LONG_HORIZON, SEEDS, SUITE_SEED);
            cfg.budget = Some(q);
            finals.push(suite.experiment(&cfg)?.1.final_mean());
        }
        let ok = finals.windows(2).all(|w| w[0] < w[1]);
        all &= ok;
        notes.push(format!(
            "{kind} Q=5,10,15 -> {:.1}, {:.1}, {:.1}{}",
            finals[0],
            finals[1],
            finals[2],
            if ok { "" } else { " not increasing" }
        ));
    }
    Ok((all, notes.join("; ")))
}

/// Key of an event with its round dropped: feedback and silence arrive at different times.
#[derive(PartialEq)]
enum Step {
    Move(Trigger, Direction, f64),
    Lock(f64),
}

fn arm_of(e: &SearchEvent) -> Option<usize> {
    match e {
        SearchEvent::Move { arm, .. } | SearchEvent::Lock { arm, .. } => *arm,
    }
}

/// Each arm's search steps in order, with loss-mode triggers swapped.
fn steps(events: &[SearchEvent], arm: Option<usize>, flip: bool) -> Vec<Step> {
    let swap = |t: Trigger| match (t, flip) {
        (Trigger::Feedback, true) => Trigger::Silence,
        (Trigger::Silence, true) => Trigger::Feedback,
        (t, false) => t,
    };
    events
        .iter()
        .filter(|e| arm_of(e) == arm)
        .map(|e| match *e {
            SearchEvent::Move {
                trigger,
                direction,
                next,
                ..
            } => Step::Move(swap(trigger), direction, next),
            SearchEvent::Lock { estimate, .. } => Step::Lock(estimate),
        })
        .collect()
}

/// Same search path per arm, with feedback and silence exchanged.
fn mirrored(loss: &[SearchEvent], reward: &[SearchEvent]) -> bool {
    let mut arms: Vec<Option<usize>> = loss.iter().chain(reward).map(arm_of).collect();
    arms.sort_unstable();
    arms.dedup();
    loss.len() == reward.len()
        && loss.iter().any(|e| matches!(e, SearchEvent::Lock { .. }))
        && arms
            .into_iter()
            .all(|a| steps(loss, a, true) == steps(reward, a, false))
}

/// Per-arm search order depends on when other arms lock, so the multi-arm
/// searches are compared by their rules: each trigger moves the opposite end
/// in the two modes, and every arm locks at the same estimate.
fn inverted(loss: &[SearchEvent], reward: &[SearchEvent]) -> bool {
    let obeys = |events: &[SearchEvent], feedback_dir: Direction| {
        events.iter().all(|e| match *e {
            SearchEvent::Move {
                trigger, direction, ..
            } => (trigger == Trigger::Feedback) == (direction == feedback_dir),
            SearchEvent::Lock { .. } => true,
        })
    };
    let locks = |events: &[SearchEvent]| {
        let mut out: Vec<(Option<usize>, f64)> = events
            .iter()
            .filter_map(|e| match *e {
                SearchEvent::Lock { arm, estimate, .. } => Some((arm, estimate)),
                SearchEvent::Move { .. } => None,
            })
            .collect();
        out.sort_by_key(|&(arm, _)| arm);
        out
    };
    let (a, b) = (locks(loss), locks(reward));
    !a.is_empty() && a == b && obeys(loss, Direction::Up) && obeys(reward, Direction::Down)
}

fn direction_counts(events: &[SearchEvent]) -> (usize, usize) {
    events.iter().fold((0, 0), |(up, down), e| match e {
        SearchEvent::Move {
            direction: Direction::Up,
            ..
        } => (up + 1, down),
        SearchEvent::Move {
            direction: Direction::Down,
            ..
        } => (up, down + 1),
        _ => (up, down),
    })
}

fn run_events(
    inst: &CsbInstance,
    mut policy: Box<dyn Policy + Send>,
    horizon: u64,
    seed: u64,
) -> Result<Vec<SearchEvent>> {
    let opt = oracle_allocation(inst)?;
    let trace = run_episode_with(
        inst,
        &opt,
        &mut policy,
        horizon,
        seed,
        EpisodeOptions::default(),
    )?;
    Ok(trace.events)
}

fn reward_mode_policies(suite: &Suite) -> Result<(bool, String)> {
    let mut all = true;
    let mut notes = Vec::new();
    for (kind, preset) in [(PolicyKind::NumSk, "I"), (PolicyKind::NumMk, "IV")] {
        let mut oracle =
            ExperimentConfig::new(preset, PolicyKind::Oracle, LONG_HORIZON, 2, SUITE_SEED);
        oracle.mode = Some(Mode::Reward);
        let (_, base) = suite.experiment(&oracle)?;
        let zero = base.mean_regret.iter().all(|&r| r == 0.0);

        let mut cfg = ExperimentConfig::new(preset, kind, LONG_HORIZON, SEEDS, SUITE_SEED);
        cfg.mode = Some(Mode::Reward);
        let (_, res) = suite.experiment(&cfg)?;
        let late = regret_rate(&res, MID_HORIZON)?;
        let end = regret_rate(&res, LONG_HORIZON)?;
        let ok = zero && end < 0.5 * late;
        all &= ok;
        notes.push(format!(
            "{kind}/{preset} oracle {} R/T {late:.4}->{end:.4}{}",
            if zero { "zero" } else { "NONZERO" },
            if ok { "" } else { " FAIL" }
        ));
    }

    // mu = 1 makes every search move deterministic, so the loss and reward
    // searches must take the same steps with swapped triggers.
    let seed = SUITE_SEED;
    let same = CsbInstance::same_threshold(vec![1.0; 50], 0.5, 15.0, Mode::Loss)?;
    let sk_cfg = SameThresholdConfig {
        delta: 0.01,
        epsilon: 0.1,
    };
    let sk = run_events(
        &same,
        Box::new(KnownSameThreshold::csb_sk(
            same.public_view(),
            sk_cfg,
            derive_stream(seed, POLICY_STREAM),
        )?),
        3000,
        seed,
    )?;
    let same_r = same.with_mode(Mode::Reward);
    let num_sk = run_events(
        &same_r,
        Box::new(KnownSameThreshold::num_sk(
            same_r.public_view(),
            sk_cfg,
            derive_stream(seed, POLICY_STREAM),
        )?),
        3000,
        seed,
    )?;
    let iv = Preset::IV.spec();
    let multi = CsbInstance::new(vec![1.0; 10], iv.instance.theta().to_vec(), 3.0, Mode::Loss)?;
    let mk_cfg = {
        let mut cfg = ExperimentConfig::new("IV", PolicyKind::CsbMk, 1, 1, seed);
        cfg.policy.delta = Some(0.01);
        cfg.resolve()?.policy.multi_config()
    };
    let mk = run_events(
        &multi,
        Box::new(KnownMultiThreshold::csb_mk(
            multi.public_view(),
            mk_cfg,
            derive_stream(seed, POLICY_STREAM),
        )?),
        30_000,
        seed,
    )?;
    let multi_r = multi.with_mode(Mode::Reward);
    let num_mk = run_events(
        &multi_r,
        Box::new(KnownMultiThreshold::num_mk(
            multi_r.public_view(),
            mk_cfg,
            derive_stream(seed, POLICY_STREAM),
        )?),
        30_000,
        seed,
    )?;
    let sk_ok = mirrored(&sk, &num_sk);
    let mk_ok = inverted(&mk, &num_mk);
    all &= sk_ok && mk_ok;
    let (up, down) = direction_counts(&num_sk);
    notes.push(format!(
        "num-sk audit {} ({} events, {up} up / {down} down), num-mk audit {} ({} events)",
        if sk_ok { "mirrors" } else { "DIFFERS" },
        num_sk.len(),
        if mk_ok {
            "inverted, same locks"
        } else {
            "DIFFERS"
        },
        num_mk.len()
    ));
    Ok((all, notes.join("; ")))
}

fn determinism(suite: &Suite) -> Result<(bool, String)> {
    let plan: [(PolicyKind, &str, Option<Mode>); 9] = [
        (PolicyKind::CsbSk, "I", None),
        (PolicyKind::CsbSu, "II", None),
        (PolicyKind::CsbMk, "III", None),
        (PolicyKind::CsbDu, "IV", None),
        (PolicyKind::NumSk, "I", Some(Mode::Reward)),
        (PolicyKind::NumMk, "IV", Some(Mode::Reward)),
        (PolicyKind::Oracle, "III", None),
        (PolicyKind::MpTs, "I", None),
        (PolicyKind::Uniform, "II", None),
    ];
    let dir = &suite.options.scratch_dir;
    let mut identical = 0;
    for (kind, preset, mode) in plan {
        let mut cfg = ExperimentConfig::new(preset, kind, 3000, 4, SUITE_SEED);
        cfg.mode = mode;
        let exp = cfg.resolve()?;
        let mut files = Vec::new();
        for (pass, workers) in [(0, 1), (1, suite.workers().max(2))] {
            let path = dir
                .join(format!("pass{pass}"))
                .join(format!("{kind}-{preset}.csv"));
            let text = render_run(&exp, &run_resolved(&exp, workers)?, Format::Csv);
            write_file(&path, &text)?;
            files.push(std::fs::read(&path).map_err(|e| LabError::io(&path, e))?);
        }
        if files[0] == files[1] {
            identical += 1;
        }
    }
    let _ = std::fs::remove_dir_all(dir);
    Ok((
        identical == plan.len(),
        format!(
            "{identical}/{} output files byte-identical across reruns",
            plan.len()
        ),
    ))
}
