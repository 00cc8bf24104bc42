use alloc::vec;
use alloc::vec::Vec;

use super::{
    ranked, require_mode, w_delta_multi, BetaPosterior, Direction, Policy, SearchEvent, Trigger,
    DEFAULT_RESOLVE_CADENCE,
};
use crate::environment::FeedbackVector;
use crate::error::{check_range, Result};
use crate::knapsack::{solve_dp, DEFAULT_SCALE};
use crate::model::{grid_floor, Allocation, Mode, PublicView, FEASIBILITY_TOL, GRID_TOL};
use crate::primitives::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiThresholdConfig {
    /// Number of distinct thresholds; `K` when unknown.
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub resolve_cadence: usize,
    pub scale: u32,
}

impl MultiThresholdConfig {
    pub fn new(n: usize, delta: f64, epsilon: f64, gamma: f64) -> Self {
        Self {
            n,
            delta,
            epsilon,
            gamma,
            resolve_cadence: DEFAULT_RESOLVE_CADENCE,
            scale: DEFAULT_SCALE,
        }
    }
}

#[derive(Clone, Debug)]
struct ArmSearch {
    lo: f64,
    hi: f64,
    good: bool,
    est: f64,
    // Allocation the pending no-feedback count was collected at.
    pending_at: f64,
}

/// Per-arm binary search on the `gamma` grid inside `(lo, hi]`, then
/// combinatorial Thompson sampling through the knapsack oracle.
///
/// During the search, the arm under the shared-threshold pointer is funded
/// first; other unresolved arms get their midpoint in index order while the
/// budget lasts; resolved arms fill what is left, best sampled
/// mean-per-resource first. The reward-mode variant swaps which observation
/// moves which end of the interval.
#[derive(Clone, Debug)]
pub struct KnownMultiThreshold {
    view: PublicView,
    config: MultiThresholdConfig,
    wait: u64,
    arms: Vec<ArmSearch>,
    confirmed: Vec<f64>,
    // 1-based arm pointer into the shared-threshold search; 0 disables it.
    next_arm: usize,
    posterior: BetaPosterior,
    rng: RngStream,
    samples: Vec<f64>,
    alloc: Vec<f64>,
    knapsack_set: Option<Vec<usize>>,
    since_solve: usize,
    round: u64,
    events: Vec<SearchEvent>,
}

impl KnownMultiThreshold {
    pub fn csb_mk(view: PublicView, config: MultiThresholdConfig, rng: RngStream) -> Result<Self> {
        require_mode(&view, "csb-mk", Mode::Loss)?;
        Self::build(view, config, rng)
    }

    pub fn num_mk(view: PublicView, config: MultiThresholdConfig, rng: RngStream) -> Result<Self> {
        require_mode(&view, "num-mk", Mode::Reward)?;
        Self::build(view, config, rng)
    }

    fn build(view: PublicView, config: MultiThresholdConfig, rng: RngStream) -> Result<Self> {
        let k = view.arms;
        check_range("gamma", config.gamma, config.gamma > 0.0, "gamma > 0")?;
        check_range(
            "n",
            config.n as f64,
            config.n >= 1 && config.n <= k,
            "1 <= n <= K",
        )?;
        check_range(
            "resolve_cadence",
            config.resolve_cadence as f64,
            config.resolve_cadence >= 1,
            "resolve_cadence >= 1",
        )?;
        let wait = w_delta_multi(k, config.delta, config.epsilon, view.budget, config.gamma)?;
        let q = view.budget;
        Ok(Self {
            view,
            config,
            wait,
            arms: vec![
                ArmSearch {
                    lo: 0.0,
                    hi: q,
                    good: false,
                    est: q / 2.0,
                    pending_at: 0.0,
                };
                k
            ],
            confirmed: Vec::new(),
            next_arm: usize::from(config.n < k),
            posterior: BetaPosterior::new(k),
            rng,
            samples: Vec::with_capacity(k),
            alloc: vec![0.0; k],
            knapsack_set: None,
            since_solve: 0,
            round: 0,
            events: Vec::new(),
        })
    }

    pub fn waiting_budget(&self) -> u64 {
        self.wait
    }

    /// `(lo, hi)` per arm.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.arms.iter().map(|a| (a.lo, a.hi)).collect()
    }

    pub fn confirmed_thresholds(&self) -> &[f64] {
        &self.confirmed
    }

    fn is_loss_mode(&self) -> bool {
        self.view.mode == Mode::Loss
    }

    fn all_good(&self) -> bool {
        self.arms.iter().all(|a| a.good)
    }

    /// Grid point at or below the middle of `(lo, hi]`, kept strictly above `lo`.
    fn midpoint(&self, arm: usize) -> f64 {
        let g = self.config.gamma;
        let ArmSearch { lo, hi, .. } = self.arms[arm];
        let mid = grid_floor((lo + hi) / 2.0, g) * g;
        if mid > lo + GRID_TOL {
            mid
        } else {
            (hi).min((grid_floor(lo, g) + 1.0) * g)
        }
    }

    /// Candidate for the pointer arm: a confirmed threshold inside its
    /// interval when one exists, else the midpoint.
    fn pointer_candidate(&self, arm: usize) -> f64 {
        let ArmSearch { lo, hi, .. } = self.arms[arm];
        let inside: Vec<usize> = (0..self.confirmed.len())
            .filter(|&k| self.confirmed[k] > lo && self.confirmed[k] <= hi)
            .collect();
        match (inside.first(), inside.last()) {
            (Some(&l), Some(&u)) => {
                let pick = self.confirmed[(l + u) / 2];
                if (pick - hi).abs() <= GRID_TOL {
                    pick - self.config.gamma
                } else {
                    pick
                }
            }
            _ => self.midpoint(arm),
        }
    }

    fn search_allocation(&mut self) {
        let k = self.view.arms;
        let mut left = self.view.budget;
        self.alloc.iter_mut().for_each(|a| *a = 0.0);

        let mut pointer = None;
        if self.next_arm > 0 {
            while self.next_arm <= k && self.arms[self.next_arm - 1].good {
                let est = self.arms[self.next_arm - 1].est;
                self.confirmed.push(est);
                self.confirmed.sort_by(f64::total_cmp);
                self.next_arm += 1;
            }
            if self.next_arm <= k {
                let p = self.next_arm - 1;
                let c = self.pointer_candidate(p);
                self.arms[p].est = c;
                if c > 0.0 && c <= left + FEASIBILITY_TOL {
                    self.alloc[p] = c;
                    left -= c;
                }
                pointer = Some(p);
            }
        }

        for i in 0..k {
            if self.arms[i].good || Some(i) == pointer {
                continue;
            }
            let mid = self.midpoint(i);
            self.arms[i].est = mid;
            if mid <= left + FEASIBILITY_TOL {
                self.alloc[i] = mid;
                left -= mid;
            }
        }

        let ratio: Vec<f64> = (0..k)
            .map(|i| {
                if self.arms[i].good {
                    self.samples[i] / self.arms[i].hi
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        for i in ranked(&ratio) {
            if !self.arms[i].good {
                break;
            }
            let hi = self.arms[i].hi;
            if hi <= left + FEASIBILITY_TOL {
                self.alloc[i] = hi;
                left -= hi;
            }
        }
    }

    fn exploit_allocation(&mut self) -> Result<()> {
        if self.knapsack_set.is_none() || self.since_solve >= self.config.resolve_cadence {
            let weights: Vec<f64> = self.arms.iter().map(|a| a.hi).collect();
            let sol = solve_dp(&self.samples, &weights, self.view.budget, self.config.scale)?;
            self.knapsack_set = Some(sol.selected);
            self.since_solve = 0;
        }
        self.since_solve += 1;
        self.alloc.iter_mut().for_each(|a| *a = 0.0);
        for &i in self.knapsack_set.as_deref().unwrap_or(&[]) {
            self.alloc[i] = self.arms[i].hi;
        }
        Ok(())
    }

    fn push_move(&mut self, arm: usize, trigger: Trigger, direction: Direction) {
        self.events.push(SearchEvent::Move {
            round: self.round,
            arm: Some(arm),
            trigger,
            direction,
            next: self.midpoint(arm),
        });
    }

    fn search_update(&mut self, y: &[bool]) {
        let loss_mode = self.is_loss_mode();
        for i in 0..self.view.arms {
            let a = self.alloc[i];
            let arm = &self.arms[i];
            if !arm.good && a > arm.lo + GRID_TOL {
                if a != arm.pending_at {
                    self.posterior.clear_pending(i);
                    self.arms[i].pending_at = a;
                }
                // In loss mode feedback means "a < theta"; in reward mode it
                // means "a >= theta".
                if y[i] {
                    if loss_mode {
                        self.arms[i].lo = a;
                    } else {
                        self.arms[i].hi = a;
                    }
                    self.posterior.add_successes(i, 1);
                    self.posterior.flush_pending(i);
                    let dir = if loss_mode {
                        Direction::Up
                    } else {
                        Direction::Down
                    };
                    self.push_move(i, Trigger::Feedback, dir);
                } else if self.posterior.bump_pending(i) == self.wait {
                    if loss_mode {
                        self.arms[i].hi = a;
                    } else {
                        self.arms[i].lo = a;
                    }
                    self.posterior.clear_pending(i);
                    let dir = if loss_mode {
                        Direction::Down
                    } else {
                        Direction::Up
                    };
                    self.push_move(i, Trigger::Silence, dir);
                }
                let arm = &mut self.arms[i];
                if arm.hi - arm.lo <= self.config.gamma + GRID_TOL {
                    arm.good = true;
                    arm.est = arm.hi;
                    self.events.push(SearchEvent::Lock {
                        round: self.round,
                        arm: Some(i),
                        estimate: self.arms[i].hi,
                    });
                }
            } else {
                let observable = if loss_mode {
                    a <= arm.lo + GRID_TOL || (arm.good && a < arm.hi)
                } else {
                    a >= arm.hi || (arm.good && a >= arm.hi)
                };
                if observable {
                    self.posterior.observe(i, y[i]);
                }
            }
        }
    }
}

impl Policy for KnownMultiThreshold {
    fn name(&self) -> &'static str {
        if self.is_loss_mode() {
            "csb-mk"
        } else {
            "num-mk"
        }
    }

    fn select(&mut self, round: u64) -> Result<Allocation> {
        self.round = round;
        self.posterior
            .sample_into(&mut self.rng, &mut self.samples)?;
        if self.all_good() {
            self.exploit_allocation()?;
        } else {
            self.search_allocation();
        }
        Ok(Allocation::from_raw(self.alloc.clone()))
    }

    fn update(&mut self, feedback: &FeedbackVector) -> Result<()> {
        let y = &feedback.y;
        match &self.knapsack_set {
            Some(set) if self.all_good() => {
                let mut funded = vec![false; self.view.arms];
                for &i in set {
                    funded[i] = true;
                }
                for i in 0..self.view.arms {
                    // Loss mode learns from the unfunded arms, reward mode
                    // from the funded ones.
                    if funded[i] != self.is_loss_mode() {
                        self.posterior.observe(i, y[i]);
                    }
                }
            }
            _ => self.search_update(y),
        }
        Ok(())
    }

    fn locked(&self) -> Option<bool> {
        Some(self.all_good())
    }

    fn threshold_estimate(&self) -> Option<Vec<f64>> {
        Some(self.arms.iter().map(|a| a.hi).collect())
    }

    fn tolerance(&self) -> Option<f64> {
        Some(self.config.gamma)
    }

    fn events(&self) -> &[SearchEvent] {
        &self.events
    }

    fn posterior(&self) -> Option<&BetaPosterior> {
        Some(&self.posterior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::derive_stream;

    fn view(k: usize, q: f64, mode: Mode) -> PublicView {
        PublicView {
            arms: k,
            budget: q,
            mode,
        }
    }

    fn scripted_loss(a: f64, theta: f64) -> FeedbackVector {
        // mu = 1: a loss whenever the arm is under-funded.
        FeedbackVector {
            y: vec![a < theta],
            observed: vec![a < theta],
        }
    }

    #[test]
    fn single_arm_search_brackets_threshold() {
        let cfg = MultiThresholdConfig::new(1, 0.1, 0.5, 0.1);
        let mut p = KnownMultiThreshold::csb_mk(view(1, 1.0, Mode::Loss), cfg, derive_stream(1, 1))
            .unwrap();
        let mut lows = Vec::new();
        for t in 1..=500 {
            let a = p.select(t).unwrap().as_slice()[0];
            p.update(&scripted_loss(a, 0.4)).unwrap();
            let (lo, _) = p.bounds()[0];
            if lows.last() != Some(&lo) {
                lows.push(lo);
            }
            if p.locked() == Some(true) {
                break;
            }
        }
        assert_eq!(p.locked(), Some(true));
        let (lo, hi) = p.bounds()[0];
        assert!(hi - lo <= 0.1 + 1e-9);
        assert!(lo < 0.4 && 0.4 <= hi, "({lo}, {hi}]");
        assert!((hi - 0.4).abs() < 1e-9);
        // Losses only ever push the lower end up.
        assert!(lows.windows(2).all(|w| w[0] < w[1]));
        assert!(p
            .events()
            .iter()
            .any(|e| matches!(e, SearchEvent::Lock { .. })));
    }

    #[test]
    fn first_round_funds_midpoints_in_index_order() {
        let cfg = MultiThresholdConfig::new(4, 0.1, 0.1, 0.01);
        let mut p = KnownMultiThreshold::csb_mk(view(4, 3.0, Mode::Loss), cfg, derive_stream(1, 1))
            .unwrap();
        let a = p.select(1).unwrap();
        assert_eq!(a.as_slice(), &[1.5, 1.5, 0.0, 0.0]);
    }

    #[test]
    fn pointer_arm_reuses_confirmed_threshold() {
        let cfg = MultiThresholdConfig::new(1, 0.1, 0.5, 0.1);
        let mut p = KnownMultiThreshold::csb_mk(view(2, 2.0, Mode::Loss), cfg, derive_stream(1, 1))
            .unwrap();
        p.arms[0] = ArmSearch {
            lo: 0.5,
            hi: 0.6,
            good: true,
            est: 0.6,
            pending_at: 0.0,
        };
        let a = p.select(1).unwrap();
        assert_eq!(p.confirmed_thresholds(), &[0.6]);
        assert_eq!(a.as_slice()[1], 0.6);
        // Silence at 0.6 pulls hi down to it; the retry then sits one cell
        // below the shared value.
        for t in 0..p.waiting_budget() {
            p.select(2 + t).unwrap();
            p.update(&FeedbackVector {
                y: vec![false, false],
                observed: vec![true, false],
            })
            .unwrap();
        }
        assert_eq!(p.bounds()[1], (0.0, 0.6));
        let a = p.select(100).unwrap();
        assert!((a.as_slice()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn allocations_stay_feasible() {
        let cfg = MultiThresholdConfig::new(3, 0.1, 0.2, 0.05);
        let theta = [0.7, 0.2, 0.45];
        let mut p = KnownMultiThreshold::csb_mk(view(3, 1.0, Mode::Loss), cfg, derive_stream(5, 1))
            .unwrap();
        for t in 1..=3000 {
            let a = p.select(t).unwrap();
            assert!(a.is_feasible(1.0), "{:?}", a);
            let y: Vec<bool> = (0..3).map(|i| a.as_slice()[i] < theta[i]).collect();
            p.update(&FeedbackVector {
                observed: y.clone(),
                y,
            })
            .unwrap();
        }
        assert_eq!(p.locked(), Some(true));
        for (i, (lo, hi)) in p.bounds().into_iter().enumerate() {
            assert!(
                lo < theta[i] && theta[i] <= hi + 1e-9,
                "arm {i}: ({lo}, {hi}]"
            );
        }
    }

    #[test]
    fn reward_mode_single_arm() {
        let cfg = MultiThresholdConfig::new(1, 0.1, 0.5, 0.1);
        let mut p =
            KnownMultiThreshold::num_mk(view(1, 1.0, Mode::Reward), cfg, derive_stream(1, 1))
                .unwrap();
        for t in 1..=500 {
            let a = p.select(t).unwrap().as_slice()[0];
            let hit = a >= 0.4;
            p.update(&FeedbackVector {
                y: vec![hit],
                observed: vec![hit],
            })
            .unwrap();
            if p.locked() == Some(true) {
                break;
            }
        }
        let (lo, hi) = p.bounds()[0];
        assert!(lo < 0.4 && 0.4 <= hi + 1e-9);
        assert!((hi - 0.4).abs() < 1e-9);
    }

    #[test]
    fn construction_checks() {
        let v = view(3, 1.0, Mode::Loss);
        let rng = || derive_stream(1, 1);
        assert!(
            KnownMultiThreshold::csb_mk(v, MultiThresholdConfig::new(3, 0.1, 0.1, 0.0), rng())
                .is_err()
        );
        assert!(
            KnownMultiThreshold::csb_mk(v, MultiThresholdConfig::new(0, 0.1, 0.1, 0.1), rng())
                .is_err()
        );
        assert!(
            KnownMultiThreshold::csb_mk(v, MultiThresholdConfig::new(4, 0.1, 0.1, 0.1), rng())
                .is_err()
        );
        assert!(
            KnownMultiThreshold::num_mk(v, MultiThresholdConfig::new(3, 0.1, 0.1, 0.1), rng())
                .is_err()
        );
    }
}
