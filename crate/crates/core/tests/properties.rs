use csb_core::bounds::{expected_rounds_csb_su, rounds_bound_csb_sk};
use csb_core::environment::{run_episode_with, EpisodeOptions};
use csb_core::knapsack::{oracle_allocation, DEFAULT_SCALE};
use csb_core::model::{
    expected_loss, in_tolerance_interval, is_allocation_equivalent, per_round_regret,
    residual_gamma, same_threshold_equivalent, tolerance_upper,
};
use csb_core::policies::{
    w_delta_multi, AnytimeMultiConfig, CsbDu, CsbSu, FixedAllocation, KnownMultiThreshold,
    KnownSameThreshold, MpTs, MultiThresholdConfig, SameThresholdConfig,
};
use csb_core::{derive_stream, solve_bruteforce, solve_dp, Allocation, CsbInstance, Mode, Policy};
use proptest::prelude::*;

fn dec4() -> impl Strategy<Value = f64> {
    (0u32..=10_000).prop_map(|v| f64::from(v) / 1e4)
}

fn pos_dec4() -> impl Strategy<Value = f64> {
    (1u32..=10_000).prop_map(|v| f64::from(v) / 1e4)
}

fn scaled(values: &[f64], selected: &[usize]) -> i64 {
    selected
        .iter()
        .map(|&i| (values[i] * 1e4).round() as i64)
        .sum()
}

/// Loss-mode instance with up to `max_k` arms and four-decimal inputs.
fn instance(max_k: usize) -> impl Strategy<Value = CsbInstance> {
    (1..=max_k)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(dec4(), k),
                prop::collection::vec(pos_dec4(), k),
                1u32..=30,
            )
        })
        .prop_map(|(mu, theta, q)| {
            let budget = f64::from(q) / 10.0;
            let theta = theta.into_iter().map(|t| t.min(budget)).collect();
            CsbInstance::new(mu, theta, budget, Mode::Loss).unwrap()
        })
}

fn same_instance(min_k: usize, max_k: usize) -> impl Strategy<Value = CsbInstance> {
    (min_k..=max_k)
        .prop_flat_map(|k| (prop::collection::vec(dec4(), k), 1u32..=100, 5u32..=50))
        .prop_map(|(mu, t, q)| {
            let budget = f64::from(q) / 10.0;
            let theta_s = (f64::from(t) / 100.0).min(budget);
            CsbInstance::same_threshold(mu, theta_s, budget, Mode::Loss).unwrap()
        })
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn dp_matches_bruteforce(
        items in prop::collection::vec((dec4(), pos_dec4()), 1..=12),
        frac in 0.0f64..=1.0,
    ) {
        let (values, weights): (Vec<f64>, Vec<f64>) = items.into_iter().unzip();
        let capacity = (frac * weights.iter().sum::<f64>() * 1e4).round() / 1e4;
        let brute = solve_bruteforce(&values, &weights, capacity).unwrap();
        let dp = solve_dp(&values, &weights, capacity, DEFAULT_SCALE).unwrap();
        prop_assert_eq!(scaled(&values, &brute.selected), scaled(&values, &dp.selected));
        let used: f64 = dp.selected.iter().map(|&i| weights[i]).sum();
        prop_assert!(used <= capacity + 1e-9);
    }

    #[test]
    fn common_threshold_candidate_is_equivalent(inst in same_instance(1, 10)) {
        let theta_s = inst.common_threshold().unwrap();
        let (m, theta_hat) = same_threshold_equivalent(theta_s, inst.arms(), inst.budget()).unwrap();
        prop_assert!(m <= inst.arms());
        prop_assert!(theta_hat >= theta_s - 1e-9);
        prop_assert!(is_allocation_equivalent(&vec![theta_hat; inst.arms()], &inst).unwrap());
    }

    #[test]
    fn tolerance_interval_estimates_are_equivalent(
        inst in instance(8),
        weights in prop::collection::vec(0.0f64..=1.0, 8),
    ) {
        let gamma = residual_gamma(&inst, &oracle_allocation(&inst).unwrap());
        prop_assume!(gamma > 1e-9);
        let hat: Vec<f64> = inst
            .theta()
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| t + w * (tolerance_upper(t, gamma).unwrap() - t))
            .collect();
        for (&h, &t) in hat.iter().zip(inst.theta()) {
            prop_assert!(in_tolerance_interval(h, t, gamma).unwrap());
        }
        prop_assert!(is_allocation_equivalent(&hat, &inst).unwrap());
    }

    #[test]
    fn more_allocation_never_raises_loss(
        inst in instance(8),
        base in prop::collection::vec(0.0f64..=1.0, 8),
        extra in prop::collection::vec(0.0f64..=1.0, 8),
    ) {
        // Both allocations spend at most Q.
        let k = inst.arms();
        let unit = inst.budget() / (2 * k) as f64;
        let low: Vec<f64> = base[..k].iter().map(|b| b * unit).collect();
        let high = Allocation::new(low.iter().zip(&extra).map(|(a, b)| a + b * unit).collect()).unwrap();
        let low = Allocation::new(low).unwrap();
        prop_assert!(expected_loss(&inst, &high).unwrap() <= expected_loss(&inst, &low).unwrap() + 1e-12);
    }

    #[test]
    fn regret_against_oracle_is_nonnegative(
        inst in instance(10),
        shares in prop::collection::vec(0.0f64..=1.0, 10),
    ) {
        let k = inst.arms();
        let total: f64 = shares[..k].iter().sum();
        prop_assume!(total > 0.0);
        let a = Allocation::new(shares[..k].iter().map(|s| s / total * inst.budget() * 0.999).collect()).unwrap();
        let opt = oracle_allocation(&inst).unwrap();
        prop_assert!(per_round_regret(&inst, &a, &opt).unwrap() >= 0.0);
        prop_assert_eq!(per_round_regret(&inst, &opt, &opt).unwrap(), 0.0);
    }

    #[test]
    fn sk_round_bound_shrinks_as_delta_grows(k in 2usize..200, d1 in 1e-8f64..0.5, d2 in 1e-8f64..0.5) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(rounds_bound_csb_sk(k, hi, 0.1).unwrap() <= rounds_bound_csb_sk(k, lo, 0.1).unwrap());
    }

    #[test]
    fn multi_waiting_budget_grows_as_gamma_shrinks(k in 1usize..50, g1 in 0.001f64..1.0, g2 in 0.001f64..1.0) {
        let (small, large) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        prop_assert!(w_delta_multi(k, 1e-3, 0.1, 3.0, small).unwrap() >= w_delta_multi(k, 1e-3, 0.1, 3.0, large).unwrap());
    }

    #[test]
    fn su_expected_rounds_at_least_one(mu in prop::collection::vec(dec4(), 2..20), pick in 0usize..20) {
        let m = pick % mu.len();
        if let Ok(rounds) = expected_rounds_csb_su(&mu, m) {
            prop_assert!(rounds >= 1.0 - 1e-12);
        }
    }
}

fn policies_for(inst: &CsbInstance, seed: u64) -> Vec<Box<dyn Policy>> {
    let view = inst.public_view();
    let rng = || derive_stream(seed, 1);
    let same = SameThresholdConfig {
        delta: 0.05,
        epsilon: 0.1,
    };
    let k = inst.arms();
    let mut out: Vec<Box<dyn Policy>> = vec![
        Box::new(FixedAllocation::uniform(view)),
        Box::new(FixedAllocation::oracle(inst).unwrap()),
        Box::new(
            KnownMultiThreshold::csb_mk(view, MultiThresholdConfig::new(k, 0.05, 0.1, 0.05), rng())
                .unwrap(),
        ),
        Box::new(CsbDu::new(view, AnytimeMultiConfig::new(0.05), rng()).unwrap()),
    ];
    if k >= 2 {
        out.push(Box::new(
            KnownSameThreshold::csb_sk(view, same, rng()).unwrap(),
        ));
        out.push(Box::new(CsbSu::new(view, rng()).unwrap()));
        out.push(Box::new(MpTs::new(view, k / 2, rng()).unwrap()));
    }
    out
}

fn reward_policies_for(inst: &CsbInstance, seed: u64) -> Vec<Box<dyn Policy>> {
    let view = inst.public_view();
    let rng = || derive_stream(seed, 1);
    let k = inst.arms();
    let mut out: Vec<Box<dyn Policy>> = vec![Box::new(
        KnownMultiThreshold::num_mk(view, MultiThresholdConfig::new(k, 0.05, 0.1, 0.05), rng())
            .unwrap(),
    )];
    if k >= 2 {
        let cfg = SameThresholdConfig {
            delta: 0.05,
            epsilon: 0.1,
        };
        out.push(Box::new(
            KnownSameThreshold::num_sk(view, cfg, rng()).unwrap(),
        ));
    }
    out
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn every_policy_stays_within_budget(inst in instance(8), seed in any::<u64>()) {
        let opt = oracle_allocation(&inst).unwrap();
        let reward = inst.with_mode(Mode::Reward);
        let runs = policies_for(&inst, seed)
            .into_iter()
            .map(|p| (&inst, p))
            .chain(reward_policies_for(&reward, seed).into_iter().map(|p| (&reward, p)));
        for (target, mut p) in runs {
            let trace = run_episode_with(target, &opt, &mut p, 400, seed, EpisodeOptions { record_allocations: true })
                .unwrap();
            for a in trace.per_round_allocations.as_ref().unwrap() {
                prop_assert!(a.is_feasible(target.budget()), "{} overspent: {:?}", p.name(), a);
            }
            prop_assert!(trace.cumulative_regret.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn episodes_replay_exactly(inst in same_instance(2, 12), seed in any::<u64>()) {
        let opt = oracle_allocation(&inst).unwrap();
        let run = || {
            let cfg = SameThresholdConfig { delta: 0.05, epsilon: 0.1 };
            let mut p = KnownSameThreshold::csb_sk(inst.public_view(), cfg, derive_stream(seed, 1)).unwrap();
            run_episode_with(&inst, &opt, &mut p, 300, seed, EpisodeOptions::default()).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}
