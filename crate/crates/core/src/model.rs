//! Instances, allocations, and the loss/regret accounting built on them.
//!
//! An arm is *funded* by an allocation when it receives at least its threshold.
//! Funded arms are censored in loss mode (no loss, no observation) and are the
//! only ones that pay out in reward mode. Everything else in this module is
//! expressed through that indicator.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_range, CsbError, Result};
use crate::knapsack::{solve_bruteforce, BRUTEFORCE_LIMIT};

/// Absolute slack when comparing an allocation total against the budget.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Slack applied before `ceil`/`floor` on ratios like `theta / gamma`, so
/// that `0.55 / 0.01 = 55.00000000000001` still lands on grid point 55.
pub(crate) const GRID_TOL: f64 = 1e-9;

pub(crate) fn grid_ceil(x: f64, step: f64) -> f64 {
    libm::ceil(x / step - GRID_TOL)
}

pub(crate) fn grid_floor(x: f64, step: f64) -> f64 {
    libm::floor(x / step + GRID_TOL)
}

/// Smallest grid point `k * step` strictly above `x`, judged on the float
/// product itself so that `x` a hair below a grid point maps to that point.
pub(crate) fn grid_above(x: f64, step: f64) -> f64 {
    let mut k = libm::floor(x / step);
    while k * step <= x {
        k += 1.0;
    }
    while k > 1.0 && (k - 1.0) * step > x {
        k -= 1.0;
    }
    k * step
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Minimise the summed mean loss of unfunded arms.
    Loss,
    /// Maximise the summed mean reward of funded arms.
    Reward,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Loss => f.write_str("loss"),
            Mode::Reward => f.write_str("reward"),
        }
    }
}

/// A problem instance: per-arm means and thresholds, the budget, the mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CsbInstance {
    mu: Vec<f64>,
    theta: Vec<f64>,
    budget: f64,
    mode: Mode,
}

/// What a policy is allowed to know about an instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PublicView {
    pub arms: usize,
    pub budget: f64,
    pub mode: Mode,
}

impl CsbInstance {
    pub fn new(mu: Vec<f64>, theta: Vec<f64>, budget: f64, mode: Mode) -> Result<Self> {
        if mu.is_empty() {
            return Err(CsbError::NoArms);
        }
        if theta.len() != mu.len() {
            return Err(CsbError::LengthMismatch {
                what: "theta",
                expected: mu.len(),
                got: theta.len(),
            });
        }
        check_range("Q", budget, budget > 0.0, "Q > 0")?;
        for &m in &mu {
            check_range("mu", m, (0.0..=1.0).contains(&m), "0 <= mu <= 1")?;
        }
        for &t in &theta {
            check_range("theta", t, t > 0.0 && t <= budget, "0 < theta <= Q")?;
        }
        Ok(Self {
            mu,
            theta,
            budget,
            mode,
        })
    }

    pub fn same_threshold(mu: Vec<f64>, theta_s: f64, budget: f64, mode: Mode) -> Result<Self> {
        let theta = vec![theta_s; mu.len()];
        Self::new(mu, theta, budget, mode)
    }

    pub fn arms(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The shared threshold, when every arm has the same one.
    pub fn common_threshold(&self) -> Option<f64> {
        let first = self.theta[0];
        self.theta.iter().all(|&t| t == first).then_some(first)
    }

    pub fn public_view(&self) -> PublicView {
        PublicView {
            arms: self.arms(),
            budget: self.budget,
            mode: self.mode,
        }
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Self::new(self.mu.clone(), self.theta.clone(), budget, self.mode)
    }

    pub fn with_threshold(&self, theta_s: f64) -> Result<Self> {
        Self::same_threshold(self.mu.clone(), theta_s, self.budget, self.mode)
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    /// `true` where the allocation reaches the arm's threshold.
    pub fn funded<'a>(&'a self, alloc: &'a Allocation) -> impl Iterator<Item = bool> + 'a {
        self.theta.iter().zip(&alloc.0).map(|(&t, &a)| a >= t)
    }
}

/// A nonnegative resource vector. Feasibility against a budget is checked
/// separately since the same vector is judged against different instances.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    pub fn new(amounts: Vec<f64>) -> Result<Self> {
        for (arm, &value) in amounts.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(CsbError::NegativeAllocation { arm, value });
            }
        }
        Ok(Self(amounts))
    }

    pub fn zeros(arms: usize) -> Self {
        Self(vec![0.0; arms])
    }

    /// Gives `level` to each listed arm and nothing to the rest.
    pub fn uniform_on(arms: usize, selected: &[usize], level: f64) -> Self {
        let mut a = vec![0.0; arms];
        for &i in selected {
            a[i] = level;
        }
        Self(a)
    }

    pub(crate) fn from_raw(amounts: Vec<f64>) -> Self {
        Self(amounts)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_feasible(&self, budget: f64) -> bool {
        self.total() <= budget + FEASIBILITY_TOL
            && self.0.iter().all(|&a| a <= budget + FEASIBILITY_TOL)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn check_feasible(instance: &CsbInstance, alloc: &Allocation) -> Result<()> {
    if alloc.len() != instance.arms() {
        return Err(CsbError::LengthMismatch {
            what: "allocation",
            expected: instance.arms(),
            got: alloc.len(),
        });
    }
    if !alloc.is_feasible(instance.budget) {
        return Err(CsbError::Infeasible {
            total: alloc.total(),
            budget: instance.budget,
        });
    }
    Ok(())
}

/// Candidate thresholds `[Q/K, Q/(K-1), ..., Q]`, strictly increasing.
pub fn theta_candidate_set(arms: usize, budget: f64) -> Result<Vec<f64>> {
    if arms == 0 {
        return Err(CsbError::NoArms);
    }
    check_range("Q", budget, budget > 0.0, "Q > 0")?;
    Ok((0..arms).map(|m| budget / (arms - m) as f64).collect())
}

/// For a common threshold `theta_s`, the number of arms `M` that can be
/// funded and the candidate `Q/M` that funds exactly those.
pub fn same_threshold_equivalent(theta_s: f64, arms: usize, budget: f64) -> Result<(usize, f64)> {
    if arms == 0 {
        return Err(CsbError::NoArms);
    }
    check_range("Q", budget, budget > 0.0, "Q > 0")?;
    check_range(
        "theta_s",
        theta_s,
        theta_s > 0.0 && theta_s <= budget,
        "0 < theta_s <= Q",
    )?;
    let affordable = libm::floor(budget / theta_s + GRID_TOL) as usize;
    let m = affordable.min(arms).max(1);
    Ok((m, budget / m as f64))
}

/// Expected per-round loss in loss mode, expected reward in reward mode.
pub fn expected_loss(instance: &CsbInstance, alloc: &Allocation) -> Result<f64> {
    check_feasible(instance, alloc)?;
    let want_funded = instance.mode == Mode::Reward;
    Ok(instance
        .funded(alloc)
        .zip(&instance.mu)
        .filter(|(f, _)| *f == want_funded)
        .map(|(_, &m)| m)
        .sum())
}

/// Expected gap of `alloc` against the optimal allocation `opt`. Both modes
/// reduce to the mean mass of arms funded by `opt` but not by `alloc`, minus
/// the reverse.
pub fn per_round_regret(
    instance: &CsbInstance,
    alloc: &Allocation,
    opt: &Allocation,
) -> Result<f64> {
    check_feasible(instance, alloc)?;
    check_feasible(instance, opt)?;
    let gap: f64 = instance
        .funded(opt)
        .zip(instance.funded(alloc))
        .zip(&instance.mu)
        .map(|((o, a), &m)| m * (o as u8 as f64 - a as u8 as f64))
        .sum();
    // Distinct optimal sets can differ by an ulp.
    Ok(if gap < 0.0 && gap > -1e-12 { 0.0 } else { gap })
}

/// Per-arm share of the budget left over by the optimal allocation.
pub fn residual_gamma(instance: &CsbInstance, opt: &Allocation) -> f64 {
    let used: f64 = instance
        .funded(opt)
        .zip(&instance.theta)
        .filter(|(f, _)| *f)
        .map(|(_, &t)| t)
        .sum();
    ((instance.budget - used) / instance.arms() as f64).max(0.0)
}

/// Upper end of the tolerance interval, `ceil(theta / gamma) * gamma`.
pub fn tolerance_upper(theta: f64, gamma: f64) -> Result<f64> {
    check_range("gamma", gamma, gamma > 0.0, "gamma > 0")?;
    Ok((grid_ceil(theta, gamma) * gamma).max(theta))
}

/// Whether `theta_hat` lies in `[theta, ceil(theta / gamma) * gamma]`.
pub fn in_tolerance_interval(theta_hat: f64, theta: f64, gamma: f64) -> Result<bool> {
    let upper = tolerance_upper(theta, gamma)?;
    Ok(theta_hat >= theta - GRID_TOL && theta_hat <= upper + GRID_TOL)
}

/// Two thresholds are different when they fall in different `gamma` cells.
pub fn thresholds_differ(theta_i: f64, theta_j: f64, gamma: f64) -> Result<bool> {
    check_range("gamma", gamma, gamma > 0.0, "gamma > 0")?;
    Ok(grid_ceil(theta_i, gamma) != grid_ceil(theta_j, gamma))
}

/// Exhaustive check that `theta_hat` yields the same optimal objective as
/// the instance's true thresholds.
pub fn is_allocation_equivalent(theta_hat: &[f64], instance: &CsbInstance) -> Result<bool> {
    if theta_hat.len() != instance.arms() {
        return Err(CsbError::LengthMismatch {
            what: "theta_hat",
            expected: instance.arms(),
            got: theta_hat.len(),
        });
    }
    let truth = solve_bruteforce(&instance.mu, &instance.theta, instance.budget)?;
    let guess = solve_bruteforce(&instance.mu, theta_hat, instance.budget)?;
    Ok((truth.total_value - guess.total_value).abs() <= 1e-12)
}

/// Gap statistics over every feasible funded set.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSummary {
    /// Largest per-round regret of any feasible allocation.
    pub nabla_max: f64,
    /// Smallest positive per-round regret (0 when every feasible set is optimal).
    pub nabla_min: f64,
    /// Smallest positive regret among feasible sets containing each arm; 0 when
    /// no suboptimal feasible set contains it.
    pub nabla_i_min: Vec<f64>,
    /// Number of arms funded by the optimal allocation.
    pub optimal_funded: usize,
    /// Most arms any feasible allocation can fund.
    pub max_funded: usize,
}

/// Works on any arm count for common-threshold instances; otherwise limited
/// to exhaustive enumeration.
pub fn gap_summary(instance: &CsbInstance) -> Result<GapSummary> {
    let k = instance.arms();
    if let Some(theta_s) = instance.common_threshold() {
        if k > BRUTEFORCE_LIMIT {
            return same_threshold_gaps(instance, theta_s);
        }
    }
    if k > BRUTEFORCE_LIMIT {
        return Err(CsbError::TooManyItems {
            items: k,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let opt = solve_bruteforce(&instance.mu, &instance.theta, instance.budget)?;
    let best = opt.total_value;
    let mut nabla_max = 0.0f64;
    let mut nabla_min = f64::INFINITY;
    let mut per_arm = vec![f64::INFINITY; k];
    let mut max_funded = 0;
    for mask in 0u32..(1u32 << k) {
        let (mut w, mut v) = (0.0, 0.0);
        for i in 0..k {
            if mask >> i & 1 == 1 {
                w += instance.theta[i];
                v += instance.mu[i];
            }
        }
        if w > instance.budget + FEASIBILITY_TOL {
            continue;
        }
        max_funded = max_funded.max(mask.count_ones() as usize);
        let gap = best - v;
        nabla_max = nabla_max.max(gap);
        if gap > 1e-12 {
            nabla_min = nabla_min.min(gap);
            for (i, slot) in per_arm.iter_mut().enumerate() {
                if mask >> i & 1 == 1 {
                    *slot = slot.min(gap);
                }
            }
        }
    }
    let finite = |x: f64| if x.is_finite() { x } else { 0.0 };
    Ok(GapSummary {
        nabla_max,
        nabla_min: finite(nabla_min),
        nabla_i_min: per_arm.into_iter().map(finite).collect(),
        optimal_funded: opt.selected.len(),
        max_funded,
    })
}

// With a common threshold the feasible funded sets are exactly the sets of at
// most M arms. A set's gap splits into "drop a top arm" (mu_j) and "swap a
// top arm for another" (mu_j - mu_i) pieces, each nonnegative, so the
// smallest positive gaps are single pieces.
fn same_threshold_gaps(instance: &CsbInstance, theta_s: f64) -> Result<GapSummary> {
    let k = instance.arms();
    let mu = &instance.mu;
    let (m, _) = same_threshold_equivalent(theta_s, k, instance.budget)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| mu[b].total_cmp(&mu[a]).then(a.cmp(&b)));
    let (top, rest) = order.split_at(m);
    let positive_min = |skip_top: Option<usize>, skip_rest: Option<usize>| {
        let mut best = f64::INFINITY;
        for &j in top.iter().filter(|&&j| Some(j) != skip_top) {
            for piece in core::iter::once(mu[j]).chain(
                rest.iter()
                    .filter(|&&i| Some(i) != skip_rest)
                    .map(|&i| mu[j] - mu[i]),
            ) {
                if piece > 1e-12 {
                    best = best.min(piece);
                }
            }
        }
        best
    };
    let mut per_arm = vec![f64::INFINITY; k];
    for &i in top {
        per_arm[i] = positive_min(Some(i), None);
    }
    for &i in rest {
        per_arm[i] = top
            .iter()
            .map(|&j| match mu[j] - mu[i] {
                gap if gap > 1e-12 => gap,
                _ => positive_min(Some(j), Some(i)),
            })
            .fold(f64::INFINITY, f64::min);
    }
    let finite = |x: f64| if x.is_finite() { x } else { 0.0 };
    let opt = crate::knapsack::oracle_allocation(instance)?;
    Ok(GapSummary {
        nabla_max: top.iter().map(|&j| mu[j]).sum(),
        nabla_min: finite(positive_min(None, None)),
        nabla_i_min: per_arm.into_iter().map(finite).collect(),
        optimal_funded: instance.funded(&opt).filter(|&f| f).count(),
        max_funded: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_above_is_strict() {
        assert_eq!(grid_above(0.0, 0.01), 0.01);
        assert_eq!(grid_above(0.19999999999999987, 0.01), 0.2);
        assert_eq!(grid_above(0.195, 0.01), 0.2);
        assert_eq!(grid_above(0.2, 0.01), 0.21);
        assert_eq!(grid_above(55.0 * 0.01, 0.01), 56.0 * 0.01);
        for k in 1..400 {
            let x = f64::from(k) * 0.01;
            assert!(grid_above(x, 0.01) > x);
            assert!(grid_above(x, 0.01) - x < 0.01 + 1e-12);
        }
    }
    use approx_eq::assert_close;

    mod approx_eq {
        macro_rules! assert_close {
            ($a:expr, $b:expr) => {
                assert_close!($a, $b, 1e-12)
            };
            ($a:expr, $b:expr, $tol:expr) => {{
                let (a, b): (f64, f64) = ($a, $b);
                assert!((a - b).abs() <= $tol, "{a} != {b}");
            }};
        }
        pub(crate) use assert_close;
    }

    fn three_arm() -> CsbInstance {
        CsbInstance::new(vec![0.9, 0.6, 0.4], vec![0.6, 0.55, 0.45], 1.0, Mode::Loss).unwrap()
    }

    #[test]
    fn instance_validation() {
        assert_eq!(
            CsbInstance::new(vec![], vec![], 1.0, Mode::Loss),
            Err(CsbError::NoArms)
        );
        assert!(CsbInstance::new(vec![0.5], vec![0.5, 0.5], 1.0, Mode::Loss).is_err());
        assert!(CsbInstance::new(vec![1.5], vec![0.5], 1.0, Mode::Loss).is_err());
        assert!(CsbInstance::new(vec![0.5], vec![0.0], 1.0, Mode::Loss).is_err());
        assert!(CsbInstance::new(vec![0.5], vec![1.5], 1.0, Mode::Loss).is_err());
        assert!(CsbInstance::new(vec![0.5], vec![0.5], 0.0, Mode::Loss).is_err());
        assert!(CsbInstance::new(vec![0.5], vec![0.5], f64::NAN, Mode::Loss).is_err());
    }

    #[test]
    fn candidate_set() {
        let c = theta_candidate_set(3, 1.0).unwrap();
        assert_eq!(c, vec![1.0 / 3.0, 0.5, 1.0]);
        assert_eq!(theta_candidate_set(1, 5.0).unwrap(), vec![5.0]);
        let c = theta_candidate_set(4, 2.0).unwrap();
        assert_eq!(c, vec![0.5, 2.0 / 3.0, 1.0, 2.0]);
        assert!(theta_candidate_set(0, 1.0).is_err());
        assert!(theta_candidate_set(3, 0.0).is_err());
    }

    #[test]
    fn same_threshold_examples() {
        assert_eq!(same_threshold_equivalent(0.5, 50, 15.0).unwrap(), (30, 0.5));
        assert_eq!(same_threshold_equivalent(7.0, 12, 7.0).unwrap(), (1, 7.0));
        let (m, t) = same_threshold_equivalent(0.3, 3, 1.0).unwrap();
        assert_eq!(m, 3);
        assert_close!(t, 1.0 / 3.0);
        assert!(same_threshold_equivalent(0.0, 3, 1.0).is_err());
        assert!(same_threshold_equivalent(1.5, 3, 1.0).is_err());
    }

    #[test]
    fn same_threshold_candidate_membership() {
        for k in 1..=12 {
            for q in [0.7, 1.0, 3.0, 15.0] {
                let cands = theta_candidate_set(k, q).unwrap();
                for step in 1..=40 {
                    let theta_s = q * step as f64 / 40.0;
                    let (_, hat) = same_threshold_equivalent(theta_s, k, q).unwrap();
                    assert!(cands.contains(&hat));
                }
            }
        }
    }

    #[test]
    fn loss_of_three_arm_example() {
        let inst = three_arm();
        let opt = Allocation::new(vec![0.0, 0.55, 0.45]).unwrap();
        assert_close!(expected_loss(&inst, &opt).unwrap(), 0.9);
        let all = Allocation::new(vec![0.6, 0.55, 0.45]).unwrap();
        assert!(expected_loss(&inst, &all).is_err());
        let zero = Allocation::zeros(3);
        assert_close!(expected_loss(&inst, &zero).unwrap(), 1.9);

        let full =
            CsbInstance::new(vec![0.9, 0.6, 0.4], vec![0.3, 0.3, 0.3], 1.0, Mode::Loss).unwrap();
        let cover = Allocation::new(vec![0.3, 0.3, 0.3]).unwrap();
        assert_eq!(expected_loss(&full, &cover).unwrap(), 0.0);
    }

    #[test]
    fn reward_mode_objective() {
        let inst = three_arm().with_mode(Mode::Reward);
        let opt = Allocation::new(vec![0.0, 0.55, 0.45]).unwrap();
        assert_close!(expected_loss(&inst, &opt).unwrap(), 1.0);
        assert_eq!(expected_loss(&inst, &Allocation::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn regret_examples() {
        let inst = three_arm();
        let opt = Allocation::new(vec![0.0, 0.55, 0.45]).unwrap();
        assert_eq!(per_round_regret(&inst, &opt, &opt).unwrap(), 0.0);
        assert_close!(
            per_round_regret(&inst, &Allocation::zeros(3), &opt).unwrap(),
            1.0
        );
        let top = Allocation::new(vec![0.6, 0.0, 0.0]).unwrap();
        assert_close!(expected_loss(&inst, &top).unwrap(), 1.0);
        assert_close!(per_round_regret(&inst, &top, &opt).unwrap(), 0.1);
    }

    #[test]
    fn infeasible_allocation_rejected() {
        let inst = three_arm();
        let a = Allocation::new(vec![0.5, 0.5, 0.1]).unwrap();
        assert!(matches!(
            expected_loss(&inst, &a),
            Err(CsbError::Infeasible { .. })
        ));
        assert!(Allocation::new(vec![-0.1, 0.0]).is_err());
        // rounding slack
        let third = 1.0 / 3.0;
        let a = Allocation::new(vec![third, third, third]).unwrap();
        assert!(a.is_feasible(1.0));
    }

    #[test]
    fn gamma_examples() {
        let inst = three_arm();
        let opt = Allocation::new(vec![0.0, 0.55, 0.45]).unwrap();
        assert_close!(residual_gamma(&inst, &opt), 0.0);
        let roomy = CsbInstance::new(vec![0.2, 0.3], vec![0.25, 0.25], 1.0, Mode::Loss).unwrap();
        let opt = Allocation::new(vec![0.25, 0.25]).unwrap();
        assert_close!(residual_gamma(&roomy, &opt), 0.25);
    }

    #[test]
    fn tolerance_interval_examples() {
        assert!(in_tolerance_interval(0.46, 0.46, 0.01).unwrap());
        assert!(in_tolerance_interval(0.46, 0.455, 0.01).unwrap());
        assert!(!in_tolerance_interval(0.47, 0.455, 0.01).unwrap());
        assert!(!in_tolerance_interval(0.45, 0.455, 0.01).unwrap());
        assert!(in_tolerance_interval(0.55, 0.55, 0.01).unwrap());
        assert!(in_tolerance_interval(0.3, 0.3, 0.01).unwrap());
        assert!(in_tolerance_interval(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn threshold_difference_examples() {
        assert!(!thresholds_differ(0.4, 0.4, 0.01).unwrap());
        assert!(thresholds_differ(0.30, 0.55, 0.01).unwrap());
        assert!(!thresholds_differ(0.301, 0.309, 0.01).unwrap());
        assert!(thresholds_differ(0.3, 0.3, -1.0).is_err());
    }

    #[test]
    fn equivalence_identity_and_same_threshold() {
        let inst = three_arm();
        assert!(is_allocation_equivalent(inst.theta(), &inst).unwrap());
        let same =
            CsbInstance::same_threshold(vec![0.5, 0.4, 0.3, 0.2], 0.3, 1.0, Mode::Loss).unwrap();
        let (_, hat) = same_threshold_equivalent(0.3, 4, 1.0).unwrap();
        assert!(is_allocation_equivalent(&[hat; 4], &same).unwrap());
        assert!(!is_allocation_equivalent(&[0.2; 4], &same).unwrap());
        let big = CsbInstance::same_threshold(vec![0.5; 21], 0.3, 1.0, Mode::Loss).unwrap();
        assert!(matches!(
            is_allocation_equivalent(big.theta(), &big),
            Err(CsbError::TooManyItems { .. })
        ));
    }

    #[test]
    fn gap_summary_single_arm() {
        let inst = CsbInstance::new(vec![0.7], vec![0.5], 1.0, Mode::Loss).unwrap();
        let g = gap_summary(&inst).unwrap();
        assert_close!(g.nabla_max, 0.7);
        assert_close!(g.nabla_min, 0.7);
        assert_eq!(g.optimal_funded, 1);
        assert_eq!(g.max_funded, 1);
        assert_eq!(g.nabla_i_min, vec![0.0]);
    }

    #[test]
    fn gap_summary_three_arm() {
        // Feasible funded sets with Q = 1: {}, {0}, {1}, {2}, {1,2}.
        // Values 0, .9, .6, .4, 1.0 -> gaps 1.0, .1, .4, .6, 0.
        let g = gap_summary(&three_arm()).unwrap();
        assert_close!(g.nabla_max, 1.0);
        assert_close!(g.nabla_min, 0.1);
        assert_close!(g.nabla_i_min[0], 0.1);
        assert_close!(g.nabla_i_min[1], 0.4);
        assert_close!(g.nabla_i_min[2], 0.6);
        assert_eq!(g.optimal_funded, 2);
        assert_eq!(g.max_funded, 2);
        assert!(g.nabla_min <= g.nabla_max);
    }

    #[test]
    fn same_threshold_gaps_match_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let k = rng.random_range(1..=10);
            // Two-decimal means produce plenty of ties.
            let mu: Vec<f64> = (0..k)
                .map(|_| rng.random_range(0..=10) as f64 / 10.0)
                .collect();
            let budget = rng.random_range(1..=8) as f64 / 2.0;
            let theta_s = rng.random_range(1..=8) as f64 / 8.0 * budget;
            let inst = CsbInstance::same_threshold(mu, theta_s, budget, Mode::Loss).unwrap();
            let closed = same_threshold_gaps(&inst, theta_s).unwrap();
            let brute = gap_summary(&inst).unwrap();
            assert_close!(closed.nabla_max, brute.nabla_max, 1e-9);
            assert_close!(closed.nabla_min, brute.nabla_min, 1e-9);
            assert_eq!(closed.max_funded, brute.max_funded);
            for (a, b) in closed.nabla_i_min.iter().zip(&brute.nabla_i_min) {
                assert_close!(*a, *b, 1e-9);
            }
        }
    }

    #[test]
    fn gap_summary_fifty_arms() {
        let mu: Vec<f64> = (0..50).map(|i| 0.5 - i as f64 / 100.0).collect();
        let g =
            gap_summary(&CsbInstance::same_threshold(mu, 0.5, 15.0, Mode::Loss).unwrap()).unwrap();
        // Top 30 means sum to 15 - 4.35.
        assert_close!(g.nabla_max, 10.65, 1e-9);
        assert_close!(g.nabla_min, 0.01, 1e-9);
        assert_eq!(g.max_funded, 30);
        assert_eq!(g.optimal_funded, 30);
    }
}
