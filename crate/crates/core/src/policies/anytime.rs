use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    require_mode, top_k, BetaPosterior, Direction, Policy, SearchEvent, Trigger,
    DEFAULT_RESOLVE_CADENCE,
};
use crate::environment::FeedbackVector;
use crate::error::{check_range, Result};
use crate::knapsack::{solve_dp, DEFAULT_SCALE};
use crate::model::{grid_above, Allocation, Mode, PublicView, FEASIBILITY_TOL};
use crate::primitives::RngStream;

/// Same threshold, no horizon or mean floor needed: start by spreading the
/// budget over all arms and drop one arm from the funded set after every
/// round with an observed loss.
#[derive(Clone, Debug)]
pub struct CsbSu {
    view: PublicView,
    level: usize,
    posterior: BetaPosterior,
    rng: RngStream,
    samples: Vec<f64>,
    chosen: Vec<usize>,
    in_chosen: Vec<bool>,
    round: u64,
    events: Vec<SearchEvent>,
}

impl CsbSu {
    pub fn new(view: PublicView, rng: RngStream) -> Result<Self> {
        require_mode(&view, "csb-su", Mode::Loss)?;
        let k = view.arms;
        Ok(Self {
            view,
            level: k,
            posterior: BetaPosterior::new(k),
            rng,
            samples: Vec::with_capacity(k),
            chosen: Vec::new(),
            in_chosen: vec![false; k],
            round: 0,
            events: Vec::new(),
        })
    }

    /// Number of arms currently sharing the budget.
    pub fn funded_arms(&self) -> usize {
        self.level
    }
}

impl Policy for CsbSu {
    fn name(&self) -> &'static str {
        "csb-su"
    }

    fn select(&mut self, round: u64) -> Result<Allocation> {
        self.round = round;
        self.posterior
            .sample_into(&mut self.rng, &mut self.samples)?;
        self.chosen = top_k(&self.samples, self.level);
        self.in_chosen.iter_mut().for_each(|b| *b = false);
        for &i in &self.chosen {
            self.in_chosen[i] = true;
        }
        let share = self.view.budget / self.level as f64;
        Ok(Allocation::uniform_on(self.view.arms, &self.chosen, share))
    }

    fn update(&mut self, feedback: &FeedbackVector) -> Result<()> {
        let y = &feedback.y;
        if self.chosen.iter().any(|&i| y[i]) {
            if self.level > 1 {
                self.level -= 1;
                self.events.push(SearchEvent::Move {
                    round: self.round,
                    arm: None,
                    trigger: Trigger::Feedback,
                    direction: Direction::Up,
                    next: self.view.budget / self.level as f64,
                });
            }
            for &i in &self.chosen {
                self.posterior.observe(i, y[i]);
                self.posterior.flush_pending(i);
            }
            self.posterior.clear_all_pending();
        } else {
            for &i in &self.chosen {
                self.posterior.bump_pending(i);
            }
        }
        for i in (0..self.view.arms).filter(|&i| !self.in_chosen[i]) {
            self.posterior.observe(i, y[i]);
        }
        Ok(())
    }

    fn threshold_estimate(&self) -> Option<Vec<f64>> {
        Some(vec![self.view.budget / self.level as f64; self.view.arms])
    }

    fn events(&self) -> &[SearchEvent] {
        &self.events
    }

    fn posterior(&self) -> Option<&BetaPosterior> {
        Some(&self.posterior)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnytimeMultiConfig {
    pub gamma: f64,
    pub resolve_cadence: usize,
    pub scale: u32,
}

impl AnytimeMultiConfig {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            resolve_cadence: DEFAULT_RESOLVE_CADENCE,
            scale: DEFAULT_SCALE,
        }
    }
}

/// Distinct thresholds, anytime: keep a per-arm lower bound `L_i` raised on
/// every observed loss and step one grid cell above it.
///
/// While the budget covers every arm's next candidate, arms with a known
/// lower bound get their candidate and the rest share the leftover equally.
/// Otherwise a knapsack over sampled means picks which arms to fund.
#[derive(Clone, Debug)]
pub struct CsbDu {
    view: PublicView,
    config: AnytimeMultiConfig,
    lower: Vec<f64>,
    // Pending no-loss counts per allocation level, keyed by f64 bits
    // (nonnegative floats order the same as their bits).
    pending: Vec<BTreeMap<u64, u64>>,
    posterior: BetaPosterior,
    rng: RngStream,
    samples: Vec<f64>,
    alloc: Vec<f64>,
    in_play: Vec<bool>,
    knapsack_set: Option<Vec<usize>>,
    solved_for: Vec<f64>,
    since_solve: usize,
    round: u64,
    events: Vec<SearchEvent>,
}

impl CsbDu {
    pub fn new(view: PublicView, config: AnytimeMultiConfig, rng: RngStream) -> Result<Self> {
        require_mode(&view, "csb-du", Mode::Loss)?;
        check_range("gamma", config.gamma, config.gamma > 0.0, "gamma > 0")?;
        check_range(
            "resolve_cadence",
            config.resolve_cadence as f64,
            config.resolve_cadence >= 1,
            "resolve_cadence >= 1",
        )?;
        let k = view.arms;
        Ok(Self {
            view,
            config,
            lower: vec![0.0; k],
            pending: vec![BTreeMap::new(); k],
            posterior: BetaPosterior::new(k),
            rng,
            samples: Vec::with_capacity(k),
            alloc: vec![0.0; k],
            in_play: vec![false; k],
            knapsack_set: None,
            solved_for: Vec::new(),
            since_solve: 0,
            round: 0,
            events: Vec::new(),
        })
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    /// Next grid cell strictly above `L_i`.
    fn candidate(&self, arm: usize) -> f64 {
        grid_above(self.lower[arm], self.config.gamma)
    }

    pub fn candidates(&self) -> Vec<f64> {
        (0..self.view.arms).map(|i| self.candidate(i)).collect()
    }

    /// Whether the last `select` was in the equal-split phase.
    pub fn exploring(&self) -> bool {
        self.knapsack_set.is_none()
    }

    fn explore(&mut self, cands: &[f64]) {
        let known: f64 = (0..self.view.arms)
            .filter(|&i| self.lower[i] != 0.0)
            .map(|i| cands[i])
            .sum();
        let zero_count = self.lower.iter().filter(|&&l| l == 0.0).count();
        let share = if zero_count > 0 {
            ((self.view.budget - known) / zero_count as f64).max(0.0)
        } else {
            0.0
        };
        for i in 0..self.view.arms {
            self.alloc[i] = if self.lower[i] != 0.0 {
                cands[i]
            } else {
                share
            };
            self.in_play[i] = true;
        }
        self.knapsack_set = None;
    }

    fn exploit(&mut self, cands: Vec<f64>) -> Result<()> {
        let stale = self.knapsack_set.is_none()
            || self.since_solve >= self.config.resolve_cadence
            || cands != self.solved_for;
        if stale {
            let sol = solve_dp(&self.samples, &cands, self.view.budget, self.config.scale)?;
            self.knapsack_set = Some(sol.selected);
            self.solved_for = cands;
            self.since_solve = 0;
        }
        self.since_solve += 1;
        self.alloc.iter_mut().for_each(|a| *a = 0.0);
        self.in_play.iter_mut().for_each(|b| *b = false);
        for &i in self.knapsack_set.as_deref().unwrap_or(&[]) {
            self.alloc[i] = self.solved_for[i];
            self.in_play[i] = true;
        }
        Ok(())
    }
}

impl Policy for CsbDu {
    fn name(&self) -> &'static str {
        "csb-du"
    }

    fn select(&mut self, round: u64) -> Result<Allocation> {
        self.round = round;
        self.posterior
            .sample_into(&mut self.rng, &mut self.samples)?;
        let cands = self.candidates();
        let need: f64 = cands.iter().sum();
        if need <= self.view.budget + FEASIBILITY_TOL {
            self.explore(&cands);
        } else {
            self.exploit(cands)?;
        }
        Ok(Allocation::from_raw(self.alloc.clone()))
    }

    fn update(&mut self, feedback: &FeedbackVector) -> Result<()> {
        let y = &feedback.y;
        for i in 0..self.view.arms {
            if !self.in_play[i] {
                self.posterior.observe(i, y[i]);
                continue;
            }
            let level = self.alloc[i];
            if y[i] {
                if self.lower[i] < level {
                    self.lower[i] = level;
                    self.events.push(SearchEvent::Move {
                        round: self.round,
                        arm: Some(i),
                        trigger: Trigger::Feedback,
                        direction: Direction::Up,
                        next: self.candidate(i),
                    });
                }
                self.posterior.add_successes(i, 1);
                let cut = self.lower[i].to_bits();
                let moved: u64 = self.pending[i].range(..=cut).map(|(_, &n)| n).sum();
                self.posterior.add_failures(i, moved);
                self.pending[i] = self.pending[i].split_off(&(cut + 1));
            } else {
                *self.pending[i].entry(level.to_bits()).or_insert(0) += 1;
            }
        }
        Ok(())
    }

    fn threshold_estimate(&self) -> Option<Vec<f64>> {
        Some(self.candidates())
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

    fn view(k: usize, q: f64) -> PublicView {
        PublicView {
            arms: k,
            budget: q,
            mode: Mode::Loss,
        }
    }

    fn fb(y: Vec<bool>) -> FeedbackVector {
        FeedbackVector {
            observed: vec![true; y.len()],
            y,
        }
    }

    #[test]
    fn su_starts_with_even_split() {
        let mut p = CsbSu::new(view(5, 2.0), derive_stream(1, 1)).unwrap();
        let a = p.select(1).unwrap();
        assert!(a.as_slice().iter().all(|&x| (x - 0.4).abs() < 1e-15));
    }

    #[test]
    fn su_drops_one_arm_per_loss_round() {
        let mut p = CsbSu::new(view(5, 2.0), derive_stream(1, 1)).unwrap();
        for t in 1..=10u64 {
            p.select(t).unwrap();
            p.update(&fb(vec![true; 5])).unwrap();
            assert_eq!(p.funded_arms(), 5usize.saturating_sub(t as usize).max(1));
        }
    }

    #[test]
    fn su_pending_counts_reset_on_loss() {
        let mut p = CsbSu::new(view(3, 3.0), derive_stream(4, 1)).unwrap();
        p.select(1).unwrap();
        p.update(&fb(vec![false; 3])).unwrap();
        assert_eq!(p.posterior.pending(), &[1, 1, 1]);
        p.select(2).unwrap();
        p.update(&fb(vec![true, false, false])).unwrap();
        assert_eq!(p.posterior.pending(), &[0, 0, 0]);
        assert_eq!(p.posterior.successes(), &[2, 1, 1]);
        assert_eq!(p.posterior.failures(), &[2, 3, 3]);
    }

    #[test]
    fn du_first_round_even_split() {
        let mut p = CsbDu::new(
            view(4, 2.0),
            AnytimeMultiConfig::new(0.1),
            derive_stream(1, 1),
        )
        .unwrap();
        let a = p.select(1).unwrap();
        assert_eq!(a.as_slice(), &[0.5; 4]);
    }

    #[test]
    fn du_loss_raises_lower_bound() {
        let mut p = CsbDu::new(
            view(10, 3.0),
            AnytimeMultiConfig::new(0.01),
            derive_stream(1, 1),
        )
        .unwrap();
        let a = p.select(1).unwrap();
        assert!((a.as_slice()[0] - 0.3).abs() < 1e-15);
        let mut y = vec![false; 10];
        y[0] = true;
        p.update(&fb(y)).unwrap();
        assert!((p.lower_bounds()[0] - 0.3).abs() < 1e-15);
        assert!((p.candidates()[0] - 0.31).abs() < 1e-12);
        // The other arms share what is left.
        let a = p.select(2).unwrap();
        assert!((a.as_slice()[0] - 0.31).abs() < 1e-12);
        assert!((a.as_slice()[1] - 2.69 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn du_pending_levels_transfer_up_to_lower_bound() {
        let mut p = CsbDu::new(
            view(1, 1.0),
            AnytimeMultiConfig::new(0.25),
            derive_stream(1, 1),
        )
        .unwrap();
        // Exploration: the single arm gets the whole budget.
        p.select(1).unwrap();
        p.update(&fb(vec![false])).unwrap();
        p.select(2).unwrap();
        p.update(&fb(vec![false])).unwrap();
        assert_eq!(p.pending[0].len(), 1);
        p.select(3).unwrap();
        p.update(&fb(vec![true])).unwrap();
        assert_eq!(p.lower_bounds(), &[1.0]);
        assert!(p.pending[0].is_empty());
        assert_eq!(p.posterior.successes(), &[2]);
        assert_eq!(p.posterior.failures(), &[3]);
    }

    #[test]
    fn du_zero_mean_arm_gets_one_cell() {
        // Budget too small for everyone: knapsack phase. Arms that never
        // lose keep L = 0 and are funded with gamma only.
        let mut p = CsbDu::new(
            view(3, 1.0),
            AnytimeMultiConfig::new(0.1),
            derive_stream(2, 1),
        )
        .unwrap();
        p.lower = vec![0.0, 0.6, 0.6];
        let a = p.select(1).unwrap();
        assert!(!p.exploring());
        assert!(a.is_feasible(1.0));
        assert!(a.as_slice()[0] == 0.0 || (a.as_slice()[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn du_rejects_bad_gamma() {
        assert!(CsbDu::new(
            view(3, 1.0),
            AnytimeMultiConfig::new(0.0),
            derive_stream(1, 1)
        )
        .is_err());
    }
}
