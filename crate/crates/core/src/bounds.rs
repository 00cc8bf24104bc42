//! Closed-form round and regret bounds.
//!
//! Only the explicit terms are evaluated. Asymptotic remainders with no
//! published constant are returned separately as the quantity inside the
//! `O(.)`, never folded into the value.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_range, CsbError, Result};
use crate::knapsack::oracle_allocation;
use crate::model::{grid_floor, CsbInstance};
use crate::policies::{grid_points, w_delta_multi_raw, w_delta_same_raw};

/// Bernoulli KL divergence `d(p, q)` with `0 ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_range("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1")?;
    check_range("q", q, (0.0..=1.0).contains(&q), "0 <= q <= 1")?;
    if p == q {
        return Ok(0.0);
    }
    if q == 0.0 || q == 1.0 {
        return Err(CsbError::InfiniteDivergence { p, q });
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * libm::log(a / b) };
    Ok(term(p, q) + term(1.0 - p, 1.0 - q))
}

fn sorted_desc(mu: &[f64]) -> Result<Vec<f64>> {
    if mu.is_empty() {
        return Err(CsbError::NoArms);
    }
    for &m in mu {
        check_range("mu", m, (0.0..=1.0).contains(&m), "0 <= mu <= 1")?;
    }
    let mut v = mu.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

fn check_top(mu: &[f64], m: usize) -> Result<()> {
    if m > mu.len() {
        return Err(CsbError::OutOfRange {
            name: "M",
            value: m as f64,
            expected: "M <= K",
        });
    }
    if m > 0 && m < mu.len() && mu[m - 1] == mu[m] {
        return Err(CsbError::TiedBoundary(m));
    }
    Ok(())
}

/// `sum_{i <= M} (mu_i - mu_{M+1}) / d(mu_{M+1}, mu_i)` over means sorted
/// in decreasing order.
fn log_coefficient(mu: &[f64], m: usize) -> Result<f64> {
    if m == 0 || m == mu.len() {
        return Ok(0.0);
    }
    let edge = mu[m];
    let mut sum = 0.0;
    for &top in &mu[..m] {
        sum += (top - edge) / kl_bernoulli(edge, top)?;
    }
    Ok(sum)
}

fn log_horizon(horizon: f64) -> Result<f64> {
    check_range("T", horizon, horizon >= 1.0, "T >= 1")?;
    Ok(libm::log(horizon))
}

/// Asymptotic regret lower bound for any strongly consistent learner when
/// all arms share one threshold and `M` arms can be shielded.
pub fn lower_bound_same(mu: &[f64], m: usize, horizon: f64) -> Result<f64> {
    let mu = sorted_desc(mu)?;
    check_top(&mu, m)?;
    Ok(log_horizon(horizon)? * log_coefficient(&mu, m)?)
}

/// High-probability rounds for the same-threshold binary search:
/// `W * log2 K` with the unrounded waiting budget.
pub fn rounds_bound_csb_sk(arms: usize, delta: f64, epsilon: f64) -> Result<f64> {
    Ok(w_delta_same_raw(arms, delta, epsilon)? * libm::log2(arms as f64))
}

/// High-probability rounds for the multi-threshold search:
/// `W * (A log2 ceil(1 + Q/gamma) + K log2(n + 1))`, where `A` is the number
/// of arms carrying the `n` distinct thresholds.
pub fn rounds_bound_csb_mk(
    arms: usize,
    delta: f64,
    epsilon: f64,
    budget: f64,
    gamma: f64,
    n: usize,
    distinct_arms: usize,
) -> Result<f64> {
    check_range("n", n as f64, n >= 1 && n <= arms, "1 <= n <= K")?;
    check_range(
        "distinct_arms",
        distinct_arms as f64,
        distinct_arms <= arms,
        "A <= K",
    )?;
    let w = w_delta_multi_raw(arms, delta, epsilon, budget, gamma)?;
    let per_arm = libm::log2(grid_points(budget, gamma));
    Ok(w * (distinct_arms as f64 * per_arm + arms as f64 * libm::log2(n as f64 + 1.0)))
}

/// Expected rounds for the anytime same-threshold search:
/// `sum_{L=M+1}^{K} 1 / (1 - prod of (1 - mu) over the L smallest means)`.
pub fn expected_rounds_csb_su(mu: &[f64], m: usize) -> Result<f64> {
    let desc = sorted_desc(mu)?;
    check_range("M", m as f64, m <= desc.len(), "M <= K")?;
    let k = desc.len();
    let mut total = 0.0;
    // The L smallest means are desc[K - L..].
    let mut miss = 1.0;
    for l in 1..=k {
        miss *= 1.0 - desc[k - l];
        if l > m {
            let hit = 1.0 - miss;
            if hit <= 0.0 {
                return Err(CsbError::OutOfRange {
                    name: "mu",
                    value: 0.0,
                    expected: "some loss probability among the smallest arms",
                });
            }
            total += 1.0 / hit;
        }
    }
    Ok(total)
}

/// Expected rounds for the anytime multi-threshold search:
/// `sum over mu_i != 0 of floor(theta_i / gamma) / mu_i`.
pub fn expected_rounds_csb_du(mu: &[f64], theta: &[f64], gamma: f64) -> Result<f64> {
    if mu.len() != theta.len() {
        return Err(CsbError::LengthMismatch {
            what: "theta",
            expected: mu.len(),
            got: theta.len(),
        });
    }
    check_range("gamma", gamma, gamma > 0.0, "gamma > 0")?;
    let mut total = 0.0;
    for (&m, &t) in mu.iter().zip(theta) {
        check_range("mu", m, (0.0..=1.0).contains(&m), "0 <= mu <= 1")?;
        check_range("theta", t, t > 0.0, "theta > 0")?;
        if m != 0.0 {
            total += grid_floor(t, gamma) / m;
        }
    }
    Ok(total)
}

/// Explicit part of a regret bound plus the argument of its `O(.)` remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretBound {
    /// Threshold-search cost: rounds bound times the largest per-round gap.
    pub search: f64,
    /// Explicit `log T` term, when the bound states one.
    pub log_term: f64,
    /// Value inside the unscaled `O(.)`; no constant is applied.
    pub remainder_argument: f64,
    pub remainder: &'static str,
}

impl RegretBound {
    pub fn explicit(&self) -> f64 {
        self.search + self.log_term
    }
}

/// Known-horizon same-threshold regret:
/// `W log2 K nabla_max + log T sum_{i <= M} (mu_i - mu_{M+1}) / d(mu_{M+1}, mu_i)`
/// plus `O((log T)^{2/3})`.
pub fn regret_bound_csb_sk(
    nabla_max: f64,
    mu: &[f64],
    m: usize,
    horizon: f64,
    delta: f64,
    epsilon: f64,
) -> Result<RegretBound> {
    check_range("nabla_max", nabla_max, nabla_max >= 0.0, "nabla_max >= 0")?;
    let desc = sorted_desc(mu)?;
    check_top(&desc, m)?;
    let log_t = log_horizon(horizon)?;
    Ok(RegretBound {
        search: rounds_bound_csb_sk(desc.len(), delta, epsilon)? * nabla_max,
        log_term: log_t * log_coefficient(&desc, m)?,
        remainder_argument: libm::pow(log_t, 2.0 / 3.0),
        remainder: "(log T)^(2/3)",
    })
}

/// Anytime same-threshold regret: `sum_L nabla_max / (1 - prod)` plus
/// `O(log T sum_{i <= M} (mu_i - mu_{M+1}) / d(mu_{M+1}, mu_i))`.
pub fn regret_bound_csb_su(
    mu: &[f64],
    m: usize,
    horizon: f64,
    nabla_max: f64,
) -> Result<RegretBound> {
    check_range("nabla_max", nabla_max, nabla_max >= 0.0, "nabla_max >= 0")?;
    let desc = sorted_desc(mu)?;
    check_top(&desc, m)?;
    Ok(RegretBound {
        search: expected_rounds_csb_su(&desc, m)? * nabla_max,
        log_term: 0.0,
        remainder_argument: log_horizon(horizon)? * log_coefficient(&desc, m)?,
        remainder: "sum_i (mu_i - mu_{M+1}) log T / d(mu_{M+1}, mu_i)",
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    /// Rounds with high probability, given `delta` and `epsilon`.
    KnownParameters,
    /// Expected rounds for the anytime policies.
    UnknownParameters,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub row: &'static str,
    pub column: Column,
    /// `None` where no bound is known.
    pub value: Option<f64>,
    pub inputs: Vec<(&'static str, f64)>,
}

/// Rounds needed to find an allocation equivalent threshold vector, for
/// every policy family, evaluated on one instance.
pub fn rounds_report(
    instance: &CsbInstance,
    delta: f64,
    epsilon: f64,
    gamma: f64,
    n: usize,
) -> Result<Vec<BoundReport>> {
    let k = instance.arms();
    let q = instance.budget();
    check_range("n", n as f64, n >= 1 && n <= k, "1 <= n <= K")?;
    let opt = oracle_allocation(instance)?;
    let m = instance.funded(&opt).filter(|&f| f).count();

    let base = vec![("K", k as f64), ("delta", delta), ("epsilon", epsilon)];
    let multi = {
        let mut v = base.clone();
        v.extend([("Q", q), ("gamma", gamma)]);
        v
    };
    let report = |name: &str, row, column, value, inputs: &Vec<(&'static str, f64)>| BoundReport {
        name: name.into(),
        row,
        column,
        value,
        inputs: inputs.clone(),
    };

    let same_known = if k >= 2 {
        Some(rounds_bound_csb_sk(k, delta, epsilon)?)
    } else {
        Some(0.0)
    };
    let w_multi = w_delta_multi_raw(k, delta, epsilon, q, gamma)?;
    let diff_known = k as f64 * w_multi * libm::log2(grid_points(q, gamma));

    let mut rows = vec![
        report(
            "csb-sk rounds",
            "Same Threshold",
            Column::KnownParameters,
            same_known,
            &base,
        ),
        report(
            "csb-su expected rounds",
            "Same Threshold",
            Column::UnknownParameters,
            Some(expected_rounds_csb_su(instance.mu(), m)?),
            &vec![("K", k as f64), ("M", m as f64)],
        ),
        report(
            "csb-mk rounds",
            "Different Threshold",
            Column::KnownParameters,
            Some(diff_known),
            &multi,
        ),
        report(
            "csb-du expected rounds",
            "Different Threshold",
            Column::UnknownParameters,
            Some(expected_rounds_csb_du(
                instance.mu(),
                instance.theta(),
                gamma,
            )?),
            &vec![("K", k as f64), ("gamma", gamma)],
        ),
    ];
    if n > 1 && n < k {
        let mut inputs = multi.clone();
        inputs.push(("n", n as f64));
        rows.push(report(
            "csb-mk rounds",
            "1 < n < K",
            Column::KnownParameters,
            Some(rounds_bound_csb_mk(k, delta, epsilon, q, gamma, n, n)?),
            &inputs,
        ));
        rows.push(report(
            "none",
            "1 < n < K",
            Column::UnknownParameters,
            None,
            &inputs,
        ));
    }
    Ok(rows)
}
