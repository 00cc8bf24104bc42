//! Exact 0-1 knapsack: an exhaustive reference solver and a scaled integer DP.
//!
//! Both solvers return the lexicographically smallest index set among the
//! optimal ones, so on inputs that scale exactly they agree set-for-set.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_range, CsbError, Result};
use crate::model::{Allocation, CsbInstance, FEASIBILITY_TOL};

/// Largest item count accepted by [`solve_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 20;

/// Default integer scale for [`solve_dp`].
pub const DEFAULT_SCALE: u32 = 10_000;

// Upper bound on DP table cells (u32 each), about 1 GiB.
const MAX_CELLS: usize = 1 << 28;

// Slack when scaling, so exact decimals like 0.55 * 1e4 = 5500.000000000001
// do not get pushed to the next integer.
const SCALE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackSolution {
    /// Selected item indices, ascending.
    pub selected: Vec<usize>,
    pub total_value: f64,
    pub total_weight: f64,
}

impl KnapsackSolution {
    fn from_selection(selected: Vec<usize>, values: &[f64], weights: &[f64]) -> Self {
        let total_value = selected.iter().map(|&i| values[i]).sum();
        let total_weight = selected.iter().map(|&i| weights[i]).sum();
        Self {
            selected,
            total_value,
            total_weight,
        }
    }

    pub fn contains(&self, item: usize) -> bool {
        self.selected.binary_search(&item).is_ok()
    }
}

fn validate(values: &[f64], weights: &[f64], capacity: f64) -> Result<()> {
    if values.len() != weights.len() {
        return Err(CsbError::LengthMismatch {
            what: "weights",
            expected: values.len(),
            got: weights.len(),
        });
    }
    check_range("capacity", capacity, capacity >= 0.0, "capacity >= 0")?;
    for &v in values {
        check_range("value", v, v >= 0.0, "value >= 0")?;
    }
    for &w in weights {
        check_range("weight", w, w >= 0.0, "weight >= 0")?;
    }
    Ok(())
}

fn mask_indices(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Enumerates all `2^n` subsets. Values within `1e-12` count as tied.
pub fn solve_bruteforce(
    values: &[f64],
    weights: &[f64],
    capacity: f64,
) -> Result<KnapsackSolution> {
    validate(values, weights, capacity)?;
    let n = values.len();
    if n > BRUTEFORCE_LIMIT {
        return Err(CsbError::TooManyItems {
            items: n,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let mut best_mask = 0u32;
    let mut best_value = 0.0f64;
    for mask in 1u32..(1u32 << n) {
        let (mut w, mut v) = (0.0, 0.0);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                w += weights[i];
                v += values[i];
            }
        }
        if w > capacity + FEASIBILITY_TOL {
            continue;
        }
        if v > best_value + 1e-12
            || (v >= best_value - 1e-12 && mask_indices(mask, n) < mask_indices(best_mask, n))
        {
            best_mask = mask;
            best_value = v;
        }
    }
    Ok(KnapsackSolution::from_selection(
        mask_indices(best_mask, n),
        values,
        weights,
    ))
}

/// Integer DP on `ceil(w * scale)`, `floor(capacity * scale)`, `round(v * scale)`.
///
/// Ceiling the weights keeps every returned set feasible under the original
/// weights; the value is optimal for the scaled problem.
pub fn solve_dp(
    values: &[f64],
    weights: &[f64],
    capacity: f64,
    scale: u32,
) -> Result<KnapsackSolution> {
    validate(values, weights, capacity)?;
    if scale == 0 {
        return Err(CsbError::OutOfRange {
            name: "scale",
            value: 0.0,
            expected: "scale >= 1",
        });
    }
    let n = values.len();
    let s = scale as f64;

    let cap_f = libm::floor(capacity * s + SCALE_TOL);
    if cap_f >= u32::MAX as f64 || (n + 1).saturating_mul(cap_f as usize + 1) > MAX_CELLS {
        return Err(CsbError::CapacityOverflow(cap_f));
    }
    let cap = cap_f as usize;

    // Items heavier than the capacity can never be chosen; park them at
    // cap + 1 so the scaled weight always fits in usize.
    let w: Vec<usize> = weights
        .iter()
        .map(|&x| libm::ceil(x * s - SCALE_TOL).max(0.0).min(cap_f + 1.0) as usize)
        .collect();
    let v: Vec<u32> = values.iter().map(|&x| libm::round(x * s) as u32).collect();
    let value_sum: f64 = values.iter().map(|&x| libm::round(x * s)).sum();
    if value_sum >= u32::MAX as f64 {
        return Err(CsbError::CapacityOverflow(value_sum));
    }

    // table[i] holds the best value using items i.. at every capacity.
    let width = cap + 1;
    let mut table = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        let (head, tail) = table.split_at_mut((i + 1) * width);
        let next = &tail[..width];
        let row = &mut head[i * width..];
        let (wi, vi) = (w[i], v[i]);
        if wi > cap {
            row.copy_from_slice(next);
            continue;
        }
        row[..wi].copy_from_slice(&next[..wi]);
        for ((dst, &keep), &take) in row[wi..]
            .iter_mut()
            .zip(&next[wi..])
            .zip(&next[..width - wi])
        {
            *dst = keep.max(take + vi);
        }
    }

    let mut remaining = table[cap];
    let mut c = cap;
    let mut selected = Vec::new();
    for i in 0..n {
        if remaining == 0 {
            break;
        }
        if w[i] <= c && v[i] <= remaining && table[(i + 1) * width + c - w[i]] >= remaining - v[i] {
            selected.push(i);
            remaining -= v[i];
            c -= w[i];
        }
    }
    Ok(KnapsackSolution::from_selection(selected, values, weights))
}

fn allocation_for(instance: &CsbInstance, solution: &KnapsackSolution) -> Allocation {
    let mut a = vec![0.0; instance.arms()];
    for &i in &solution.selected {
        a[i] = instance.theta()[i];
    }
    Allocation::from_raw(a)
}

/// Funds exactly the arms chosen by the scaled DP with `theta[i]` each.
pub fn optimal_allocation(instance: &CsbInstance, scale: u32) -> Result<Allocation> {
    let sol = solve_dp(instance.mu(), instance.theta(), instance.budget(), scale)?;
    Ok(allocation_for(instance, &sol))
}

/// The regret baseline: exhaustive search for small instances, scaled DP
/// at [`DEFAULT_SCALE`] beyond [`BRUTEFORCE_LIMIT`] arms.
pub fn oracle_allocation(instance: &CsbInstance) -> Result<Allocation> {
    let sol = if instance.arms() <= BRUTEFORCE_LIMIT {
        solve_bruteforce(instance.mu(), instance.theta(), instance.budget())?
    } else {
        solve_dp(
            instance.mu(),
            instance.theta(),
            instance.budget(),
            DEFAULT_SCALE,
        )?
    };
    Ok(allocation_for(instance, &sol))
}
